"""Experiment drivers: damping rates, synchronization, convergence and
theoretical envelopes.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes CSV
artifacts into the configured output directory and returns a small
result object with the fitted quantities.  Runs are deterministic per
(config, seed) with the serial solvers.
"""

import os
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import damping, decaytheory, diagnostics, manufactured, svgplot
from .assembly import (ModelParams, build_operators, mms_forcing_functionals,
                       sync_forcing_functional)
from .diagnostics import (EnergyTrace, L2ErrorEvaluator, RateFit,
                          algebraic_fit, exponential_fit, write_trace)
from .femspace import FunctionSpacePair
from .mesh import build_unit_square
from .timestep import (SolverConfig, Stepper, mms_initial_state,
                       random_initial_state, simulate)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


EXPERIMENTS = ("damping", "sync", "converge", "envelope")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 20
    order: int = 1
    dt: Optional[float] = None          # default 0.5 * h
    t_final: Optional[float] = None     # per-experiment default
    rossby: float = 0.1
    burger: float = 0.1
    coriolis: float = 0.0
    depth: float = 1.0
    law: str = "power:3"
    coeff: float = 10.0
    seed: int = 1
    seeds: tuple = (1, 2)
    outdir: str = "results"
    fit_window: Optional[tuple] = None
    min_energy: float = 1e-6
    meshes: tuple = (4, 8, 16, 32)
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_solver: str = "direct"
    linear_tol: float = 1e-12
    svg: bool = False
    poincare: float = 1.0
    e0: float = 1.0
    t_max: float = 100.0
    samples: int = 401


def default_config(experiment):
    """Per-experiment defaults: damping/sync follow the rotating setup
    (eps = beta = 0.1, f = 0, C = 10); converge uses unit coefficients."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if experiment in ("damping", "sync"):
        return ExperimentConfig(experiment, t_final=100.0)
    if experiment == "converge":
        return ExperimentConfig(
            experiment, t_final=10.0, rossby=1.0, burger=1.0,
            law="linear", coeff=1.0)
    return ExperimentConfig(experiment, law="power_lin:3", coeff=10.0)


def _validate(cfg):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.n < 1:
        raise ConfigError("mesh subdivision n must be positive")
    if cfg.order not in (1, 2):
        raise ConfigError("order must be 1 or 2")
    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError("dt must be positive")
    if cfg.t_final is not None and cfg.t_final <= 0:
        raise ConfigError("t_final must be positive")
    try:
        law = damping.from_config(cfg.law, cfg.coeff)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return law


def _setup(cfg, n=None):
    law = _validate(cfg)
    mesh = build_unit_square(cfg.n if n is None else n)
    space = FunctionSpacePair(mesh, cfg.order)
    params = ModelParams(rossby=cfg.rossby, burger=cfg.burger,
                         coriolis=cfg.coriolis, depth=cfg.depth, damping=law)
    ops = build_operators(space, params)
    dt = cfg.dt if cfg.dt is not None else 0.5 * mesh.h
    solver = SolverConfig(dt=dt, newton_tol=cfg.newton_tol,
                          newton_max_iter=cfg.newton_max_iter,
                          linear_solver=cfg.linear_solver,
                          linear_tol=cfg.linear_tol)
    return space, params, ops, solver


def _law_tag(cfg):
    return cfg.law.replace(":", "") + f"_C{cfg.coeff:g}"


def _fit_trace(cfg, trace, law):
    window = cfg.fit_window
    if window is None:
        window = (0.2 * trace.t[-1], 0.8 * trace.t[-1])
    try:
        if law.kind == "linear":
            return exponential_fit(trace, window, cfg.min_energy), "exponential"
        return algebraic_fit(trace, window, cfg.min_energy), "algebraic"
    except ValueError as exc:
        warnings.warn(f"rate fit skipped: {exc}")
        return None, "none"


@dataclass
class DampingResult:
    trace: EnergyTrace
    fit: Optional[RateFit]
    fit_kind: str
    csv_path: str


def run_damping(cfg):
    """Unforced decay from a random unit-energy initial state."""
    space, params, ops, solver = _setup(cfg)
    t_final = cfg.t_final if cfg.t_final is not None else 100.0
    state = random_initial_state(ops, cfg.seed)
    trace, _ = simulate(ops, solver, state, t_final)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"damping_{_law_tag(cfg)}.csv")
    write_trace(trace, path)
    fit, kind = _fit_trace(cfg, trace, params.damping)
    if cfg.svg:
        svgplot.line_plot(
            path.replace(".csv", ".svg"),
            [(trace.t, trace.E, "E(t)")],
            logx=(kind == "algebraic"), logy=True,
            xlabel="t", ylabel="E",
            title=f"energy decay, {cfg.law} C={cfg.coeff:g}")
    return DampingResult(trace, fit, kind, path)


@dataclass
class SyncResult:
    diff_trace: EnergyTrace
    fit: Optional[RateFit]
    fit_kind: str
    plateau: float
    csv_path: str


def difference_energy_trace(ops, solver, state_a, state_b, t_final, forcing):
    """Advance two states in lockstep; trace the energy of their
    difference.  Identical forcing cancels, so the difference obeys the
    unforced energy identity and the dissipation column is -dE/dt."""
    stepper_a = Stepper(ops, solver)
    stepper_b = Stepper(ops, solver)
    nsteps = int(round((t_final - state_a.t) / solver.dt))
    ts = np.empty(nsteps + 1)
    es = np.empty(nsteps + 1)
    ds = np.zeros(nsteps + 1)

    def diff_energy(a, b):
        from .timestep import State
        return diagnostics.energy(State(a.t, a.u - b.u, a.eta - b.eta), ops)

    ts[0] = state_a.t
    es[0] = diff_energy(state_a, state_b)
    ii = ops.space.interior_vel_dofs
    prev_a = prev_b = None
    for k in range(nsteps):
        guess_a = guess_b = None
        if prev_a is not None:
            guess_a = (2.0 * state_a.u[ii] - prev_a.u[ii],
                       2.0 * state_a.eta - prev_a.eta)
            guess_b = (2.0 * state_b.u[ii] - prev_b.u[ii],
                       2.0 * state_b.eta - prev_b.eta)
        prev_a, prev_b = state_a, state_b
        state_a, _ = stepper_a.step(state_a, forcing, guess=guess_a)
        state_b, _ = stepper_b.step(state_b, forcing, guess=guess_b)
        ts[k + 1] = state_a.t
        es[k + 1] = diff_energy(state_a, state_b)
        ds[k + 1] = -(es[k + 1] - es[k]) / solver.dt
    meta = {"n": ops.space.mesh.n, "order": ops.space.order, "dt": solver.dt}
    return EnergyTrace(ts, es, ds, np.zeros(nsteps + 1), meta)


def plateau_level(trace, fraction=0.1):
    """Mean energy over the trailing ``fraction`` of the trace."""
    t_lo = trace.t[-1] - fraction * (trace.t[-1] - trace.t[0])
    return float(np.mean(trace.E[trace.t >= t_lo]))


def run_sync(cfg):
    """Two random initial states under the same oscillatory forcing;
    traces the energy of the difference."""
    if len(cfg.seeds) != 2:
        raise ConfigError("sync needs exactly two seeds")
    space, params, ops, solver = _setup(cfg)
    t_final = cfg.t_final if cfg.t_final is not None else 100.0
    sa = random_initial_state(ops, cfg.seeds[0])
    sb = random_initial_state(ops, cfg.seeds[1])
    forcing = lambda t: (sync_forcing_functional(space, t, params), None)
    trace = difference_energy_trace(ops, solver, sa, sb, t_final, forcing)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(
        cfg.outdir,
        f"sync_{_law_tag(cfg)}_s{cfg.seeds[0]}_{cfg.seeds[1]}_dt{solver.dt:g}.csv")
    write_trace(trace, path)
    fit, kind = _fit_trace(cfg, trace, params.damping)
    plateau = plateau_level(trace)
    if cfg.svg:
        svgplot.line_plot(
            path.replace(".csv", ".svg"),
            [(trace.t, trace.E, "E_diff(t)")],
            logx=(kind == "algebraic"), logy=True,
            xlabel="t", ylabel="E of difference",
            title=f"synchronization, {cfg.law} C={cfg.coeff:g}")
    return SyncResult(trace, fit, kind, plateau, path)


@dataclass
class ConvergeRow:
    n: int
    h: float
    err_u_final: float
    err_eta_final: float
    err_u_max: float
    err_eta_max: float


@dataclass
class ConvergeResult:
    rows: list
    order_u: float
    order_eta: float
    order_u_max: float
    order_eta_max: float
    csv_path: str


def run_converge(cfg):
    """Manufactured-solution refinement study."""
    if len(cfg.meshes) < 3:
        raise ConfigError("convergence study needs at least 3 meshes")
    _validate(cfg)
    t_final = cfg.t_final if cfg.t_final is not None else 10.0
    rows = []
    for n in cfg.meshes:
        space, params, ops, solver = _setup(cfg, n=n)
        state = mms_initial_state(space)
        forcing = lambda t: mms_forcing_functionals(space, t, params)
        evaluator = L2ErrorEvaluator(space)
        errs = []
        observer = lambda st: errs.append(
            evaluator(st, manufactured.velocity(st.t), manufactured.elevation(st.t)))
        simulate(ops, solver, state, t_final, forcing=forcing, observer=observer)
        errs = np.asarray(errs)
        rows.append(ConvergeRow(n, space.mesh.h, errs[-1, 0], errs[-1, 1],
                                errs[:, 0].max(), errs[:, 1].max()))

    hs = np.log([r.h for r in rows])
    fit = lambda vals: float(np.polyfit(hs, np.log(vals), 1)[0])
    result = ConvergeResult(
        rows,
        order_u=fit([r.err_u_final for r in rows]),
        order_eta=fit([r.err_eta_final for r in rows]),
        order_u_max=fit([r.err_u_max for r in rows]),
        order_eta_max=fit([r.err_eta_max for r in rows]),
        csv_path="",
    )
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"converge_k{cfg.order}_{_law_tag(cfg)}.csv")
    with open(path, "w") as fh:
        fh.write("n,h,err_u_final,err_eta_final,err_u_max,err_eta_max\n")
        for r in rows:
            fh.write(f"{r.n},{r.h:.17g},{r.err_u_final:.17g},"
                     f"{r.err_eta_final:.17g},{r.err_u_max:.17g},"
                     f"{r.err_eta_max:.17g}\n")
    result.csv_path = path
    if cfg.svg:
        h = np.array([r.h for r in rows])
        svgplot.line_plot(
            path.replace(".csv", ".svg"),
            [(h, np.array([r.err_u_final for r in rows]), "u"),
             (h, np.array([r.err_eta_final for r in rows]), "eta")],
            logx=True, logy=True, xlabel="h", ylabel="L2 error",
            title=f"convergence, order {cfg.order}")
    return result


@dataclass
class EnvelopeResult:
    t: np.ndarray
    S: np.ndarray
    constants: decaytheory.DecayConstants
    csv_path: str


def run_envelope(cfg):
    """Theoretical decay envelope for the configured damping law."""
    law = _validate(cfg)
    try:
        sc = damping.structural_constants(law)
        jfun = decaytheory.j_function(law)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    params = ModelParams(rossby=cfg.rossby, burger=cfg.burger,
                         coriolis=cfg.coriolis, depth=cfg.depth, damping=law)
    constants = decaytheory.build_constants(
        params, jfun, sc.growth, cfg.e0, poincare=cfg.poincare)
    ts = np.linspace(0.0, cfg.t_max, cfg.samples)
    values = decaytheory.envelope(constants, jfun, ts)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"envelope_{_law_tag(cfg)}.csv")
    with open(path, "w") as fh:
        fh.write("t,S\n")
        for t, s in zip(ts, values):
            fh.write(f"{t:.17g},{s:.17g}\n")
    if cfg.svg:
        pos = ts > 0
        svgplot.line_plot(
            path.replace(".csv", ".svg"),
            [(ts[pos], values[pos], "S(t)")],
            logx=jfun.kind == "power", logy=True, xlabel="t", ylabel="S",
            title=f"decay envelope, {cfg.law}")
    return EnvelopeResult(ts, values, constants, path)


def run(cfg):
    runner = {
        "damping": run_damping,
        "sync": run_sync,
        "converge": run_converge,
        "envelope": run_envelope,
    }[cfg.experiment]
    return runner(cfg)
