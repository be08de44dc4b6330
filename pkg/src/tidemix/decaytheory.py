"""Theoretical energy-decay envelopes for monotone damping.

The envelope machinery turns structural constants of a damping law into
an explicit bound: the energy of (a difference of) solutions is below
S(t/T - 1) for t >= T, where S solves

    S'(tau) + |Sigma| * Jinv(S(tau) / D_J) = 0,   S(0) = E(0),

with J the concave comparison function of the law.  Power-law J gives a
closed-form algebraic envelope, linear J an exponential one.  The
Poincare constant is a user input (default 1.0); only decay exponents,
not magnitudes, are quantitatively sharp.
"""

import math
from dataclasses import dataclass

import numpy as np

from .damping import structural_constants


@dataclass(frozen=True)
class JFunction:
    """Concave comparison function J(s) = scale * s ** (2 / exponent)
    (or scale * s when linear)."""

    kind: str                 # "power" or "linear"
    scale: float
    exponent: float = 2.0     # effective ODE exponent, > 2 for "power"

    def __post_init__(self):
        if self.kind not in ("power", "linear"):
            raise ValueError(f"unknown J kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("J scale must be positive")
        if self.kind == "power" and self.exponent <= 2:
            raise ValueError("power J needs effective exponent > 2")

    def __call__(self, s):
        if self.kind == "linear":
            return self.scale * s
        return self.scale * s ** (2.0 / self.exponent)

    def inverse(self, y):
        if self.kind == "linear":
            return y / self.scale
        return (y / self.scale) ** (self.exponent / 2.0)


def j_function(law):
    """Comparison function of a damping law (linear or linearized power).

    Pure power laws are rejected: without the linear branch at infinity
    the growth constant does not exist.
    """
    sc = structural_constants(law)
    if sc.decay_class == "exponential":
        return JFunction("linear", (1.0 + law.coeff**2) / law.coeff)
    return JFunction("power", sc.j_scale, 2.0 / sc.j_exponent)


@dataclass(frozen=True)
class DecayConstants:
    """Constants of the envelope ODE.

    ``absorption_period`` is the comparison horizon T; the bound applies
    from t = T on.  ``spacetime_measure`` is |domain| * T.  The three
    weights combine the growth constant, rotation and depth bounds into
    the coefficients of the integral estimate; ``ode_scale`` (D_J) feeds
    the inverse of J in the ODE.
    """

    absorption_period: float
    spacetime_measure: float
    damping_weight: float          # multiplies the dissipation integral
    jensen_weight: float           # multiplies the concave J integral
    shifted_damping_weight: float  # absorption_period + damping_weight
    ode_scale: float
    initial_energy: float
    poincare: float


def build_constants(params, jfun, growth, initial_energy,
                    poincare=1.0, domain_area=1.0):
    """Evaluate the envelope constants for given model parameters.

    ``growth`` is the linear-growth constant of the damping law (M from
    its structural constants); ``jfun`` its comparison function.
    """
    if initial_energy < 0:
        raise ValueError("initial energy must be nonnegative")
    if poincare <= 0 or domain_area <= 0:
        raise ValueError("Poincare constant and domain area must be positive")
    h_lo, h_hi = params.depth_bounds
    eps, beta = params.rossby, params.burger
    f_max = params.coriolis_max
    T = 2.0 * poincare * math.sqrt(beta) / (eps * math.sqrt(h_lo))
    sigma = domain_area * T
    common = (1.5 + f_max * poincare**2 / (beta * h_lo)) / h_lo
    cross = poincare**2 * h_hi * eps**2 / (beta * h_lo)
    d1 = 2.0 * growth * (common + cross)
    d2 = 2.0 * (common + cross)
    d1_shift = T + d1
    if initial_energy == 0.0:
        ode_scale = d2 * sigma  # envelope is identically zero; scale unused
    else:
        ode_scale = (1.0 + d1_shift) * initial_energy / jfun(initial_energy / sigma) \
            + d2 * sigma
    return DecayConstants(T, sigma, d1, d2, d1_shift, ode_scale,
                          float(initial_energy), poincare)


def ode_coefficient(constants, jfun):
    """gamma in S' + gamma * S**(p/2) = 0 (or S' + gamma S = 0, linear)."""
    if jfun.kind == "linear":
        return constants.spacetime_measure / (jfun.scale * constants.ode_scale)
    return constants.spacetime_measure * (
        jfun.scale * constants.ode_scale) ** (-jfun.exponent / 2.0)


def ode_solution(constants, jfun, tau):
    """Closed-form solution S(tau) of the envelope ODE, tau >= 0."""
    tau = np.asarray(tau, dtype=float)
    e0 = constants.initial_energy
    if e0 == 0.0:
        return np.zeros_like(tau)
    gamma = ode_coefficient(constants, jfun)
    if jfun.kind == "linear":
        return e0 * np.exp(-gamma * tau)
    m = jfun.exponent / 2.0
    # separate variables in S' = -gamma S^m
    return (e0 ** (1.0 - m) + (m - 1.0) * gamma * tau) ** (-1.0 / (m - 1.0))


def envelope(constants, jfun, t):
    """Energy envelope at times ``t``: E(0) before the absorption period,
    S(t/T - 1) after it."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("envelope times must be nonnegative")
    T = constants.absorption_period
    tau = np.maximum(t / T - 1.0, 0.0)
    vals = ode_solution(constants, jfun, tau)
    return np.where(t < T, constants.initial_energy, vals)


def asymptotic_exponent(law):
    """Late-time algebraic exponent of the envelope: S ~ t^(-2/(p-2)).

    Raises ``ValueError`` for linear-class laws, which decay
    exponentially rather than algebraically.
    """
    if law.kind == "linear" or law.p == 2.0:
        raise ValueError("linear-class damping decays exponentially, "
                         "not algebraically")
    p = law.p if law.p > 2.0 else law.p / (law.p - 1.0)
    return -2.0 / (p - 2.0)
