import numpy as np
import pytest
from scipy.linalg import null_space

from tidemix import FunctionSpacePair, build_unit_square
from tidemix import manufactured
from tidemix.femspace import (integrate_pressure, interpolate_hdiv,
                              project_pressure)
from tidemix.mesh import cell_areas
from tidemix.quadrature import triangle_rule

from oracles import edge_flux_oracle, rt0_basis_physical


def evaluate_field(space, coeffs, cell, ref_points):
    return space.evaluate_velocity(coeffs, cell, ref_points)


def test_dof_counts(mesh2):
    s1 = FunctionSpacePair(mesh2, 1)
    assert s1.num_vel_dofs == mesh2.num_edges
    assert s1.num_pre_dofs == mesh2.num_cells
    s2 = FunctionSpacePair(mesh2, 2)
    assert s2.num_vel_dofs == 2 * mesh2.num_edges + 2 * mesh2.num_cells
    assert s2.num_pre_dofs == 3 * mesh2.num_cells


def test_boundary_dofs_match_boundary_edges(mesh2):
    s1 = FunctionSpacePair(mesh2, 1)
    assert np.array_equal(s1.boundary_vel_dofs, mesh2.boundary_edges)
    s2 = FunctionSpacePair(mesh2, 2)
    expect = np.sort(np.concatenate([2 * mesh2.boundary_edges,
                                     2 * mesh2.boundary_edges + 1]))
    assert np.array_equal(s2.boundary_vel_dofs, expect)


def test_normal_trace_duality(space2):
    """Integrated flux of basis i over edge j is the Kronecker delta."""
    mesh = space2.mesh
    for cell in (0, 3, 5):
        dofs = space2.vel_dofmap[cell]
        for local_edge in range(3):
            edge = mesh.cell_edges[cell, local_edge]
            for a, dof in enumerate(dofs):
                coeffs = np.zeros(space2.num_vel_dofs)
                coeffs[dof] = 1.0
                flux = edge_flux_oracle(
                    mesh, lambda x: _eval_on_cell(space2, coeffs, cell, x), edge)
                expected = 1.0 if dof == (edge if space2.order == 1
                                          else 2 * edge) else 0.0
                assert flux == pytest.approx(expected, abs=1e-12)


def _eval_on_cell(space, coeffs, cell, pts):
    v = space.mesh.vertices[space.mesh.cells[cell]]
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    ref = np.linalg.solve(T, (pts - v[0]).T).T
    ref = np.clip(ref, 0.0, 1.0)
    return space.evaluate_velocity(coeffs, cell, ref)


def test_rt0_basis_closed_form(mesh2):
    """Piola-mapped lowest-order basis equals sign (x - vertex) / (2A)."""
    space = FunctionSpacePair(mesh2, 1)
    pts_ref = np.array([[0.25, 0.25], [0.1, 0.6], [0.5, 0.3]])
    for cell in range(mesh2.num_cells):
        got = np.stack([space.eval_velocity_basis(cell, p) for p in pts_ref])
        expect = rt0_basis_physical(mesh2, cell,
                                    space.map_to_physical(cell, pts_ref))
        assert np.allclose(got, expect, atol=1e-13)


def test_constant_field_reproduced(space2):
    const = lambda x: np.tile([1.0, 0.0], (np.atleast_2d(x).shape[0], 1))
    coeffs = interpolate_hdiv(space2, const)
    for cell in (0, 4):
        vals = evaluate_field(space2, coeffs, cell,
                              np.array([[0.2, 0.3], [0.6, 0.1]]))
        assert np.allclose(vals, [1.0, 0.0], atol=1e-13)


def test_divergence_constant_for_lowest_order(mesh2):
    space = FunctionSpacePair(mesh2, 1)
    areas = cell_areas(mesh2)
    pts = np.array([[0.2, 0.2], [0.4, 0.5], [0.05, 0.9]])
    for cell in (0, 2, 7):
        divs = np.stack([space.eval_velocity_div(cell, p) for p in pts])
        assert np.allclose(divs, divs[0], atol=1e-13), "divergence not constant"
        expect = mesh2.cell_edge_signs[cell] / areas[cell]
        assert np.allclose(divs[0], expect, atol=1e-11)


def test_divergence_free_loop(mesh1):
    """Circulation fields from the divergence-matrix null space really are
    divergence free pointwise."""
    from tidemix.assembly import divergence_op
    space = FunctionSpacePair(mesh1, 1)
    B = divergence_op(space).toarray()
    basis = null_space(B)
    assert basis.shape[1] == space.num_vel_dofs - mesh1.num_cells
    pts = np.array([[0.3, 0.3], [0.1, 0.2]])
    for k in range(basis.shape[1]):
        for cell in range(mesh1.num_cells):
            divs = np.stack([space.eval_velocity_div(cell, p) for p in pts])
            got = divs @ basis[space.vel_dofmap[cell], k]
            assert np.allclose(got, 0.0, atol=1e-12)


def test_divergence_integral_equals_net_flux(space2):
    """Pointwise divergence integrated over a cell equals the signed sum
    of facet fluxes (divergence theorem)."""
    rng = np.random.default_rng(7)
    coeffs = rng.standard_normal(space2.num_vel_dofs)
    rule = triangle_rule(2 * space2.order + 2)
    mesh = space2.mesh
    for cell in (1, 4):
        divs = np.stack([space2.eval_velocity_div(cell, p) for p in rule.points])
        local = coeffs[space2.vel_dofmap[cell]]
        det = space2.detjac[cell]
        integral = det * np.dot(rule.weights, divs @ local)
        net_flux = 0.0
        for j in range(3):
            e = mesh.cell_edges[cell, j]
            s = mesh.cell_edge_signs[cell, j]
            net_flux += s * edge_flux_oracle(
                mesh, lambda x: _eval_on_cell(space2, coeffs, cell, x), e)
        assert integral == pytest.approx(net_flux, abs=1e-12)


def test_interpolation_flux_dofs_match_gauss_oracle():
    """Manufactured velocity at t=0: interpolant fluxes agree with a
    10-point Gauss edge oracle."""
    mesh = build_unit_square(4)
    u = manufactured.velocity(0.0)
    for order in (1, 2):
        space = FunctionSpacePair(mesh, order)
        coeffs = interpolate_hdiv(space, u)
        for edge in (0, 5, 11, 17):
            expect = edge_flux_oracle(mesh, u, edge, npoints=10)
            dof = edge if order == 1 else 2 * edge
            assert coeffs[dof] == pytest.approx(expect, abs=1e-12)


def test_interpolated_divergence_is_projected_divergence(mesh4, order):
    """Commuting property at quadrature tolerance for a smooth field."""
    from tidemix.assembly import divergence_op, mass_pressure
    space = FunctionSpacePair(mesh4, order)
    u = manufactured.velocity(0.0)
    divu = lambda x: manufactured.velocity_divergence(0.0, x)
    coeffs = interpolate_hdiv(space, u)
    proj = project_pressure(space, divu)
    B = divergence_op(space)
    Mp = mass_pressure(space)
    assert np.abs(B @ coeffs - Mp @ proj).max() < 1e-10


def test_commuting_property_exact_for_polynomials(space2):
    """For fields with polynomial normal traces the identity is exact."""
    from tidemix.assembly import divergence_op, mass_pressure
    u = lambda x: np.stack([x[:, 0]**2 + x[:, 1],
                            x[:, 0] * x[:, 1] - x[:, 1]**2], axis=1)
    divu = lambda x: 3.0 * x[:, 0] - 2.0 * x[:, 1]
    coeffs = interpolate_hdiv(space2, u)
    proj = project_pressure(space2, divu)
    B = divergence_op(space2)
    Mp = mass_pressure(space2)
    assert np.abs(B @ coeffs - Mp @ proj).max() < 1e-13


def test_linear_field_interpolation_divergence(mesh2):
    """div of the interpolant of (x, y) is the projection of 2."""
    space = FunctionSpacePair(mesh2, 1)
    coeffs = interpolate_hdiv(space, lambda x: np.atleast_2d(x))
    for cell in (0, 5):
        div = space.eval_velocity_div(cell, (0.3, 0.3)) @ \
            coeffs[space.vel_dofmap[cell]]
        assert div == pytest.approx(2.0, abs=1e-12)


def test_project_pressure_constant(space2):
    coeffs = project_pressure(space2, lambda x: np.full(len(np.atleast_2d(x)), 3.0))
    assert np.allclose(coeffs, 3.0, atol=1e-12)


def test_project_pressure_zero(space2):
    coeffs = project_pressure(space2, lambda x: np.zeros(len(np.atleast_2d(x))))
    assert np.allclose(coeffs, 0.0)


def test_project_pressure_cell_means(mesh1):
    """Projection of eta = x onto piecewise constants is the cell mean of
    x over each triangle (centroid x-coordinate)."""
    space = FunctionSpacePair(mesh1, 1)
    coeffs = project_pressure(space, lambda x: np.atleast_2d(x)[:, 0])
    centroids = mesh1.vertices[mesh1.cells].mean(axis=1)
    assert np.allclose(coeffs, centroids[:, 0], atol=1e-14)


def test_interpolation_idempotent(space2):
    u = manufactured.velocity(0.0)
    c1 = interpolate_hdiv(space2, u)

    def as_field(x):
        return _eval_anywhere(space2, c1, x)

    c2 = interpolate_hdiv(space2, as_field)
    assert np.allclose(c1, c2, atol=1e-11)


def _eval_anywhere(space, coeffs, pts):
    pts = np.atleast_2d(pts)
    mesh = space.mesh
    out = np.zeros_like(pts)
    n = mesh.n
    for i, p in enumerate(pts):
        # structured lookup: grid square then diagonal side
        ix = min(int(p[0] * n), n - 1)
        iy = min(int(p[1] * n), n - 1)
        frac = (p[0] * n - ix, p[1] * n - iy)
        cell = 2 * (iy * n + ix) + (0 if frac[1] <= frac[0] + 1e-14 else 1)
        v = mesh.vertices[mesh.cells[cell]]
        T = np.column_stack([v[1] - v[0], v[2] - v[0]])
        ref = np.linalg.solve(T, p - v[0])
        out[i] = space.evaluate_velocity(coeffs, cell, ref)[0]
    return out


def test_interpolation_error_decays_at_order_k(order):
    u = manufactured.velocity(0.0)
    errs = []
    for n in (4, 8, 16):
        mesh = build_unit_square(n)
        space = FunctionSpacePair(mesh, order)
        coeffs = interpolate_hdiv(space, u)
        rule = triangle_rule(8)
        t = space.tabulate(rule)
        uq = np.einsum("cqld,cl->cqd", t.vel, coeffs[space.vel_dofmap])
        du = uq - u(t.x_phys.reshape(-1, 2)).reshape(uq.shape)
        err = np.sqrt(np.einsum("q,c,cq->", rule.weights, t.detjac,
                                np.sum(du * du, axis=-1)))
        errs.append(err)
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > order - 0.15), rates


def test_boundary_dofs_zero_normal_trace(mesh4, order):
    """Zeroing boundary DOFs forces u.n = 0 exactly on the boundary."""
    space = FunctionSpacePair(mesh4, order)
    rng = np.random.default_rng(5)
    coeffs = rng.standard_normal(space.num_vel_dofs)
    coeffs[space.boundary_vel_dofs] = 0.0
    mesh = space.mesh
    for e in mesh.boundary_edges[:6]:
        lo, hi = mesh.edges[e]
        a, b = mesh.vertices[lo], mesh.vertices[hi]
        tang = b - a
        normal = np.array([tang[1], -tang[0]]) / np.hypot(*tang)
        (cell,) = [c for c in range(mesh.num_cells) if e in mesh.cell_edges[c]]
        for t in (0.1, 0.5, 0.9):
            x = a + t * tang
            vals = _eval_on_cell(space, coeffs, cell, x[None, :])
            assert abs(vals[0] @ normal) < 1e-12


def test_reference_moment_matrix_rejects_bad_order():
    with pytest.raises(ValueError):
        FunctionSpacePair(build_unit_square(1), 3)


def test_eval_outside_reference_cell_rejected(space2):
    with pytest.raises(ValueError):
        space2.eval_velocity_basis(0, (0.7, 0.7))
    with pytest.raises(IndexError):
        space2.eval_velocity_basis(10**6, (0.1, 0.1))


def test_integrate_pressure(space2):
    coeffs = project_pressure(space2, lambda x: np.atleast_2d(x)[:, 0])
    assert integrate_pressure(space2, coeffs) == pytest.approx(0.5, abs=1e-12)
