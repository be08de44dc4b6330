"""Energy, dissipation and error diagnostics plus decay-rate fitting."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .quadrature import triangle_rule


def energy(state, operators):
    """E = 1/2 ||u_h||^2_{1/H} + (beta / 2 eps^2) ||eta_h||^2."""
    pf = operators.params.pressure_factor
    eu = 0.5 * float(state.u @ (operators.mass_u @ state.u))
    ep = 0.5 * pf * float(state.eta @ (operators.mass_p @ state.eta))
    return eu + ep


def energy_by_quadrature(state, operators, degree=8):
    """Energy via direct quadrature of the fields (cross-check path)."""
    space = operators.space
    params = operators.params
    rule = triangle_rule(degree)
    t = space.tabulate(rule)
    uq = np.einsum("cqld,cl->cqd", t.vel, state.u[space.vel_dofmap])
    eq = np.einsum("qi,ci->cq", t.pre, state.eta[space.pre_dofmap])
    invH = 1.0 / params.depth_at(t.x_phys.reshape(-1, 2)).reshape(eq.shape)
    e_u = 0.5 * np.einsum("q,c,cq,cq->", rule.weights, t.detjac, invH,
                          np.sum(uq * uq, axis=-1))
    e_p = 0.5 * params.pressure_factor * np.einsum(
        "q,c,cq->", rule.weights, t.detjac, eq * eq)
    return float(e_u + e_p)


@dataclass
class EnergyTrace:
    """Time series of energy, dissipation rate and forcing power."""

    t: np.ndarray
    E: np.ndarray
    dissipation: np.ndarray
    forcing_power: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        self.dissipation = np.asarray(self.dissipation, dtype=float)
        self.forcing_power = np.asarray(self.forcing_power, dtype=float)
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return len(self.t)


def write_trace(trace, path):
    """CSV with 17 significant digits, so re-reading reproduces fits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "dissipation", "forcing_power"])
        for row in zip(trace.t, trace.E, trace.dissipation, trace.forcing_power):
            w.writerow([f"{v:.17g}" for v in row])


def read_trace(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return EnergyTrace(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


class L2ErrorEvaluator:
    """Cellwise-quadrature L2 errors against analytic fields.

    Tabulation is cached on the space, so per-step evaluation during a
    run costs one batch of field evaluations.
    """

    def __init__(self, space, degree=None):
        if degree is None:
            degree = 2 * space.order + 3
        self.space = space
        self.rule = triangle_rule(degree)
        self.tables = space.tabulate(self.rule)
        self._x = self.tables.x_phys.reshape(-1, 2)

    def __call__(self, state, exact_u, exact_eta):
        t = self.tables
        space = self.space
        uq = np.einsum("cqld,cl->cqd", t.vel, state.u[space.vel_dofmap])
        eq = np.einsum("qi,ci->cq", t.pre, state.eta[space.pre_dofmap])
        du = uq - np.asarray(exact_u(self._x)).reshape(uq.shape)
        de = eq - np.asarray(exact_eta(self._x)).reshape(eq.shape)
        err_u = np.einsum("q,c,cq->", self.rule.weights, t.detjac,
                          np.sum(du * du, axis=-1))
        err_e = np.einsum("q,c,cq->", self.rule.weights, t.detjac, de * de)
        return float(np.sqrt(err_u)), float(np.sqrt(err_e))


def l2_errors(space, state, exact_u, exact_eta, degree=None):
    """L2 errors of (u_h, eta_h) against analytic fields."""
    return L2ErrorEvaluator(space, degree)(state, exact_u, exact_eta)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_samples: int


def _window_samples(trace, window, min_energy):
    lo, hi = window
    mask = (trace.t >= lo) & (trace.t <= hi) & (trace.E > min_energy)
    if np.count_nonzero(mask) < 10:
        raise ValueError(
            f"fit window [{lo}, {hi}] holds {np.count_nonzero(mask)} usable "
            "samples (< 10); widen the window or lower min_energy")
    return trace.t[mask], trace.E[mask]


def _linear_fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    total = y - np.mean(y)
    ss_tot = float(total @ total)
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(coef[0]), float(coef[1]), r2, len(x))


def algebraic_fit(trace, window, min_energy=1e-6):
    """Least-squares fit of log E against log t over the window.

    Samples at or below ``min_energy`` are dropped, which keeps the
    time-discretization plateau out of the fit.
    """
    t, E = _window_samples(trace, window, min_energy)
    if np.any(t <= 0):
        raise ValueError("algebraic fit needs strictly positive times")
    return _linear_fit(np.log(t), np.log(E))


def exponential_fit(trace, window, min_energy=1e-6):
    """Least-squares fit of log E against t over the window."""
    t, E = _window_samples(trace, window, min_energy)
    return _linear_fit(t, np.log(E))


def fit_decay_exponent(trace, window, min_energy=1e-6):
    """Algebraic decay exponent: slope of log E vs log t."""
    return algebraic_fit(trace, window, min_energy).slope


def fit_exponential_rate(trace, window, min_energy=1e-6):
    """Exponential decay rate: slope of log E vs t."""
    return exponential_fit(trace, window, min_energy).slope
