import math

import numpy as np
import pytest

from tidemix.quadrature import QuadratureRule, edge_rule, triangle_rule


def reference_triangle_monomial(a, b):
    # int_T x^a y^b over the reference triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6, 7, 8, 10])
def test_triangle_rules_integrate_monomials(degree):
    rule = triangle_rule(degree)
    assert rule.degree >= degree
    assert np.all(rule.weights > 0)
    assert np.sum(rule.weights) == pytest.approx(0.5, abs=1e-14)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            got = np.dot(rule.weights, x**a * y**b)
            assert got == pytest.approx(reference_triangle_monomial(a, b),
                                        abs=1e-14), (a, b)


def test_triangle_points_inside_reference_cell():
    for degree in (2, 5, 8):
        rule = triangle_rule(degree)
        x, y = rule.points[:, 0], rule.points[:, 1]
        assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + y <= 1 + 1e-14)


@pytest.mark.parametrize("npts", [1, 2, 3, 6, 10])
def test_edge_rules_integrate_monomials(npts):
    rule = edge_rule(npts)
    assert rule.degree == 2 * npts - 1
    assert np.sum(rule.weights) == pytest.approx(1.0, abs=1e-14)
    for a in range(rule.degree + 1):
        got = np.dot(rule.weights, rule.points**a)
        assert got == pytest.approx(1.0 / (a + 1), abs=1e-14)


def test_rejects_nonpositive_weights():
    with pytest.raises(ValueError):
        QuadratureRule(np.zeros((1, 2)), np.array([-0.5]), 1)
    with pytest.raises(ValueError):
        edge_rule(0)
