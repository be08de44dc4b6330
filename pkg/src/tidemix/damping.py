"""Pointwise bottom-drag laws and their structural constants.

Three families: ``linear`` (C*v), ``power`` (C*|v|^(p-2)*v), and
``power_lin`` which follows the power law inside the unit ball and
grows linearly outside.  All are monotone; only the linear and
linearized variants keep linear growth at infinity, which the decay
theory requires.
"""

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("linear", "power", "power_lin")


@dataclass(frozen=True)
class DampingLaw:
    kind: str
    coeff: float
    p: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown damping kind {self.kind!r}")
        if self.coeff <= 0:
            raise ValueError("damping coefficient must be positive")
        if self.kind != "linear":
            if self.p is None or self.p <= 1:
                raise ValueError("power-law exponent must satisfy p > 1")

    # -- evaluation ---------------------------------------------------

    def eval(self, v):
        """g(v) for an (..., 2) array of velocities."""
        v = np.asarray(v, dtype=float)
        if self.kind == "linear":
            return self.coeff * v
        r = np.linalg.norm(v, axis=-1)
        scale = self._radial_scale(r)
        return self.coeff * scale[..., None] * v

    def _radial_scale(self, r):
        # |v|^(p-2) with the limit value 0 at the origin for p < 2,
        # clipped to the linear branch for the linearized variant
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0.0, r ** (p - 2.0), 0.0)
        if self.kind == "power_lin":
            scale = np.where(r >= 1.0, 1.0, scale)
        return scale

    def jacobian(self, v):
        """Exact derivative of :meth:`eval`, an (..., 2, 2) array.

        For p < 2 the derivative is singular at v = 0; exact zeros are
        rejected so the caller can substitute a regularized value.
        """
        v = np.asarray(v, dtype=float)
        eye = np.eye(2)
        if self.kind == "linear":
            return np.broadcast_to(self.coeff * eye, v.shape + (2,)).copy()
        p = self.p
        r = np.linalg.norm(v, axis=-1)
        if p < 2 and np.any(r == 0.0):
            raise ValueError("power-law jacobian is singular at v = 0 for p < 2")
        out = np.empty(v.shape + (2,))
        with np.errstate(divide="ignore", invalid="ignore"):
            rp2 = np.where(r > 0.0, r ** (p - 2.0), 1.0 if p == 2.0 else 0.0)
            rp4 = np.where(r > 0.0, r ** (p - 4.0), 0.0)
        outer = v[..., :, None] * v[..., None, :]
        out[:] = rp2[..., None, None] * eye + (p - 2.0) * rp4[..., None, None] * outer
        if self.kind == "power_lin":
            out = np.where((r >= 1.0)[..., None, None], eye, out)
        return self.coeff * out

    # -- structure ----------------------------------------------------

    def structural_constants(self):
        return structural_constants(self)


@dataclass(frozen=True)
class StructuralConstants:
    """Growth and concavity constants of a damping law.

    ``decay_class`` is "algebraic" when the law forces only a power-law
    energy envelope and "exponential" for linearly dominated laws.  For
    the algebraic class, ``j_exponent`` and ``j_scale`` describe the
    concave comparison function J(s) = j_scale * s**j_exponent.
    """

    growth: float            # M in |v| + |g|^2 <= M g.v for |v| > 1
    sphere_max: float        # max |g| on the unit sphere
    j_exponent: float | None
    j_scale: float | None
    decay_class: str


def structural_constants(law):
    """Constants used by the decay-envelope theory.

    Raises ``ValueError`` for a pure power law, whose superlinear growth
    at infinity admits no linear-growth constant.
    """
    C = law.coeff
    growth = (1.0 + C * C) / C
    if law.kind == "linear" or (law.kind == "power_lin" and law.p == 2.0):
        return StructuralConstants(growth, C, None, None, "exponential")
    if law.kind == "power":
        raise ValueError(
            "pure power law grows superlinearly at infinity; use power_lin")
    # effective exponent: the law itself for p > 2, the conjugate for p < 2
    pe = law.p if law.p > 2.0 else law.p / (law.p - 1.0)
    alpha = 2.0 / pe
    scale = max(1.0, C * C) * C ** (-alpha) * 2.0 ** (3.0 - 4.0 / pe)
    return StructuralConstants(growth, C, alpha, scale, "algebraic")


def from_config(spec, coeff):
    """Build a law from its config string: ``linear``, ``power:p`` or
    ``power_lin:p``."""
    spec = spec.strip()
    if spec == "linear":
        return DampingLaw("linear", coeff)
    for kind in ("power_lin", "power"):
        if spec.startswith(kind + ":"):
            try:
                p = float(spec[len(kind) + 1:])
            except ValueError:
                raise ValueError(f"bad exponent in damping spec {spec!r}") from None
            return DampingLaw(kind, coeff, p)
    raise ValueError(f"unknown damping spec {spec!r}")


def linear_law(coeff):
    return DampingLaw("linear", coeff)


def power_law(p, coeff):
    return DampingLaw("power", coeff, float(p))


def power_linearized_law(p, coeff):
    return DampingLaw("power_lin", coeff, float(p))


def regularized_jacobian(law, v, floor=1e-8):
    """Jacobian with the p < 2 singularity at the origin replaced by the
    direction-averaged value at radius ``floor``.

    Only the radius is clamped; directions of nonzero v are kept.  Used
    by quadrature-point assembly where exact zeros do occur; written
    with explicit component arithmetic since it sits in the Newton loop.
    """
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape + (2,))
    C = law.coeff
    if law.kind == "linear":
        out[...] = 0.0
        out[..., 0, 0] = C
        out[..., 1, 1] = C
        return out
    p = law.p
    r = np.linalg.norm(v, axis=-1)
    degenerate = None
    if p < 2.0:
        degenerate = r < floor
        r = np.maximum(r, floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        # the p = 2 scale is 1 everywhere, including the origin
        s1 = np.where(r > 0.0, r ** (p - 2.0), 1.0 if p == 2.0 else 0.0)
        s2 = np.where(r > 0.0, (p - 2.0) * r ** (p - 4.0), 0.0)
    if law.kind == "power_lin":
        outside = r >= 1.0
        s1 = np.where(outside, 1.0, s1)
        s2 = np.where(outside, 0.0, s2)
    v0, v1 = v[..., 0], v[..., 1]
    out[..., 0, 0] = C * (s1 + s2 * v0 * v0)
    out[..., 0, 1] = C * s2 * v0 * v1
    out[..., 1, 0] = out[..., 0, 1]
    out[..., 1, 1] = C * (s1 + s2 * v1 * v1)
    if degenerate is not None and np.any(degenerate):
        iso = C * (p / 2.0) * floor ** (p - 2.0)
        out[degenerate] = iso * np.eye(2)
    return out
