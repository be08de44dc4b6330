"""Quadrature rules on the reference triangle and reference edge.

The reference triangle has vertices (0,0), (1,0), (0,1); rule weights
sum to its area 1/2.  Classic symmetric rules are used up to degree 5;
higher degrees fall back to a collapsed-square Gauss product rule,
which keeps all weights positive at any order.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points (reference coordinates) and weights with a declared
    polynomial exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


def _sym3(a):
    return [(a, a), (1.0 - 2.0 * a, a), (a, 1.0 - 2.0 * a)]


def _tri_rule_deg1():
    return [(1.0 / 3.0, 1.0 / 3.0)], [0.5]


def _tri_rule_deg2():
    return _sym3(1.0 / 6.0), [1.0 / 6.0] * 3


def _tri_rule_deg4():
    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    pts = _sym3(a1) + _sym3(a2)
    wts = [0.5 * w1] * 3 + [0.5 * w2] * 3
    return pts, wts


def _tri_rule_deg5():
    a1, w1 = 0.470142064105115, 0.132394152788506
    a2, w2 = 0.101286507323456, 0.125939180544827
    pts = [(1.0 / 3.0, 1.0 / 3.0)] + _sym3(a1) + _sym3(a2)
    wts = [0.5 * 0.225] + [0.5 * w1] * 3 + [0.5 * w2] * 3
    return pts, wts


def _tri_rule_collapsed(degree):
    # Duffy transform of an m x m Gauss-Legendre grid; the (1-x) factor
    # raises the x-degree by one, hence m = ceil((degree + 2) / 2).
    m = (degree + 3) // 2
    x, wx = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wxi, weta = np.meshgrid(wx, wx, indexing="ij")
    pts = np.column_stack([xi.ravel(), (eta * (1.0 - xi)).ravel()])
    wts = (wxi * weta * (1.0 - xi)).ravel()
    return pts, wts


_FIXED_TRI_RULES = {
    1: _tri_rule_deg1,
    2: _tri_rule_deg2,
    4: _tri_rule_deg4,
    5: _tri_rule_deg5,
}


def triangle_rule(degree):
    """Smallest available triangle rule exact to at least ``degree``."""
    if degree < 1:
        degree = 1
    for d in sorted(_FIXED_TRI_RULES):
        if d >= degree:
            pts, wts = _FIXED_TRI_RULES[d]()
            return QuadratureRule(np.asarray(pts, dtype=float),
                                  np.asarray(wts, dtype=float), d)
    pts, wts = _tri_rule_collapsed(degree)
    return QuadratureRule(np.asarray(pts, dtype=float),
                          np.asarray(wts, dtype=float), degree)


def edge_rule(npoints):
    """Gauss-Legendre rule on [0, 1] with ``npoints`` points
    (exact to degree 2*npoints - 1)."""
    if npoints < 1:
        raise ValueError("edge rule needs at least one point")
    x, w = np.polynomial.legendre.leggauss(npoints)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * npoints - 1)
