"""Command-line driver for the tidal experiments.

Usage: ``tidemix <experiment> [flags]`` with experiments ``damping``,
``sync``, ``converge`` and ``envelope``.  A flat key=value config file
can seed any flags (``--config run.cfg``); explicit flags override it.
Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

import argparse
import sys
from dataclasses import replace

from .experiments import ConfigError, EXPERIMENTS, default_config, run
from .timestep import LinearSolverError, NewtonError

# flag name -> (dest, type, nargs, help); used for both the parser and
# config-file key translation
_OPTIONS = {
    "--n": ("n", int, None, "mesh subdivisions per side"),
    "--order": ("order", int, None, "element order: 1 lowest, 2 next-to-lowest"),
    "--dt": ("dt", float, None, "time step (default 0.5 * h)"),
    "--t-final": ("t_final", float, None, "final time"),
    "--rossby": ("rossby", float, None, "Rossby number"),
    "--burger": ("burger", float, None, "Burger number"),
    "--coriolis": ("coriolis", float, None, "constant Coriolis parameter"),
    "--depth": ("depth", float, None, "constant fluid depth"),
    "--law": ("law", str, None,
              "damping law: linear, power:p or power_lin:p"),
    "--coeff": ("coeff", float, None, "damping coefficient"),
    "--seed": ("seed", int, None, "random seed (damping)"),
    "--seeds": ("seeds", str, None, "two comma-separated seeds (sync)"),
    "--outdir": ("outdir", str, None, "output directory"),
    "--fit-window": ("fit_window", float, 2, "rate-fit window t_lo t_hi"),
    "--min-energy": ("min_energy", float, None,
                     "drop samples at or below this energy from fits"),
    "--meshes": ("meshes", str, None,
                 "comma-separated mesh list (converge)"),
    "--newton-tol": ("newton_tol", float, None, "Newton residual tolerance"),
    "--max-iter": ("newton_max_iter", int, None, "Newton iteration cap"),
    "--solver": ("linear_solver", str, None, "linear solver: direct or cg"),
    "--linear-tol": ("linear_tol", float, None, "iterative solver tolerance"),
    "--poincare": ("poincare", float, None, "Poincare constant (envelope)"),
    "--e0": ("e0", float, None, "initial energy (envelope)"),
    "--t-max": ("t_max", float, None, "envelope grid end"),
    "--samples": ("samples", int, None, "envelope grid samples"),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tidemix",
        description="Mixed finite element tidal-damping experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for exp in EXPERIMENTS:
        p = sub.add_parser(exp, help=f"run the {exp} experiment")
        p.add_argument("--config", type=str, default=None,
                       help="flat key=value file; flags override it")
        p.add_argument("--svg", action="store_true", default=None,
                       help="also write SVG plots")
        for flag, (dest, typ, nargs, help_) in _OPTIONS.items():
            p.add_argument(flag, dest=dest, type=typ, nargs=nargs,
                           default=None, help=help_)
    return parser


def _config_file_tokens(path):
    tokens = []
    flag_of = {dest: flag for flag, (dest, _, _, _) in _OPTIONS.items()}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            dest = key.replace("-", "_")
            if dest == "svg":
                if value.lower() in ("1", "true", "yes"):
                    tokens.append("--svg")
                continue
            if dest not in flag_of:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            flag = flag_of[dest]
            nargs = _OPTIONS[flag][2]
            tokens.append(flag)
            if nargs == 2:
                parts = value.replace(",", " ").split()
                if len(parts) != 2:
                    raise ConfigError(
                        f"{path}:{lineno}: {key} needs two values")
                tokens.extend(parts)
            else:
                tokens.append(value)
    return tokens


def _parse_int_list(text, what):
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def build_config(argv):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.config:
        injected = [argv[0]] + _config_file_tokens(args.config) + list(argv[1:])
        args = parser.parse_args(injected)

    cfg = default_config(args.experiment)
    updates = {}
    for _, (dest, _, nargs, _) in _OPTIONS.items():
        value = getattr(args, dest)
        if value is None:
            continue
        if dest == "seeds":
            value = _parse_int_list(value, "seed")
            if len(value) != 2:
                raise ConfigError("sync needs exactly two seeds")
        elif dest == "meshes":
            value = _parse_int_list(value, "mesh")
        elif nargs == 2:
            value = tuple(value)
        updates[dest] = value
    if args.svg:
        updates["svg"] = True
    return replace(cfg, **updates)


def _report(result, cfg):
    kind = cfg.experiment
    if kind in ("damping", "sync"):
        label = "difference energy" if kind == "sync" else "energy"
        print(f"trace written to {result.csv_path}")
        if result.fit is None:
            print(f"{label} rate fit: skipped (window too short)")
        elif result.fit_kind == "exponential":
            print(f"{label} exponential rate: {result.fit.slope:.4f} "
                  f"(R^2 = {result.fit.r_squared:.5f})")
        else:
            print(f"{label} log-log exponent: {result.fit.slope:.4f} "
                  f"(R^2 = {result.fit.r_squared:.5f})")
        if kind == "sync":
            print(f"late-time plateau: {result.plateau:.6e}")
    elif kind == "converge":
        print(f"table written to {result.csv_path}")
        print("  n      h        err_u        err_eta")
        for r in result.rows:
            print(f"{r.n:4d} {r.h:8.5f} {r.err_u_final:.6e} {r.err_eta_final:.6e}")
        print(f"fitted orders (final time): u {result.order_u:.3f}, "
              f"eta {result.order_eta:.3f}")
        print(f"fitted orders (max in time): u {result.order_u_max:.3f}, "
              f"eta {result.order_eta_max:.3f}")
    else:
        c = result.constants
        print(f"envelope written to {result.csv_path}")
        print(f"absorption period T = {c.absorption_period:.6g}, "
              f"ode scale D_J = {c.ode_scale:.6g}")


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NewtonError, LinearSolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    _report(result, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
