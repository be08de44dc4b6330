"""H(div) Raviart-Thomas velocity spaces paired with discontinuous pressure.

Order 1 is the lowest-order pair (one normal-flux DOF per edge, piecewise
constant pressure); order 2 is the next-to-lowest pair (two moments per
edge plus two interior moments, piecewise linear pressure).  Degrees of
freedom are integrated normal fluxes and flux moments over facets, which
makes divergence-theorem identities exact and DOF signs depend only on
global vertex numbering.

Velocity basis functions are mapped from the reference triangle with the
contravariant (Piola) transform, which preserves normal traces, so the
physical basis stays dual to the global facet functionals up to the
orientation sign stored per (cell, local dof).
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import cell_areas
from .quadrature import QuadratureRule, edge_rule, triangle_rule

_REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _edge_moment_weight(m, t):
    # Legendre-style moment weights on [0, 1]; m = 1 is odd about the
    # midpoint so reversing the traversal only flips the m = 0 functional.
    if m == 0:
        return np.ones_like(t)
    if m == 1:
        return t - 0.5
    raise ValueError(f"unsupported edge moment {m}")


def _monomials(order, pts):
    """Reference monomial basis values and divergences.

    Returns (values, divs) with shapes (npts, nmono, 2) and (npts, nmono).
    """
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    if order == 1:
        vals = [(one, zero), (zero, one), (x, y)]
        divs = [zero, zero, 2.0 * one]
    elif order == 2:
        vals = [
            (one, zero), (x, zero), (y, zero),
            (zero, one), (zero, x), (zero, y),
            (x * x, x * y), (x * y, y * y),
        ]
        divs = [zero, one, zero, zero, zero, one, 3.0 * x, 3.0 * y]
    else:
        raise ValueError(f"unsupported order {order}")
    values = np.stack([np.stack(v, axis=-1) for v in vals], axis=1)
    return values, np.stack(divs, axis=1)


class ReferenceElement:
    """Reference-triangle RT basis dual to facet and interior moments."""

    def __init__(self, order):
        if order not in (1, 2):
            raise ValueError("order must be 1 (lowest) or 2 (next-to-lowest)")
        self.order = order
        self.nloc_vel = 3 * order + 2 * (order - 1)
        self.nloc_pre = 1 if order == 1 else 3
        self.edge_tangents = np.empty((3, 2))
        self.edge_normals = np.empty((3, 2))
        self.edge_lengths = np.empty(3)
        for j in range(3):
            p = _REF_VERTICES[(j + 1) % 3]
            q = _REF_VERTICES[(j + 2) % 3]
            t = q - p
            L = np.hypot(*t)
            self.edge_tangents[j] = t
            self.edge_lengths[j] = L
            self.edge_normals[j] = np.array([t[1], -t[0]]) / L
        self._coef = self._build_dual_basis()

    def _build_dual_basis(self):
        order = self.order
        nmono = self.nloc_vel
        erule = edge_rule(4)
        moments = np.empty((nmono, nmono))
        row = 0
        for j in range(3):
            p = _REF_VERTICES[(j + 1) % 3]
            for m in range(order):
                pts = p[None, :] + erule.points[:, None] * self.edge_tangents[j]
                vals, _ = _monomials(order, pts)
                lam = _edge_moment_weight(m, erule.points)
                flux = vals @ self.edge_normals[j]
                moments[row] = self.edge_lengths[j] * np.einsum(
                    "q,q,qm->m", erule.weights, lam, flux)
                row += 1
        if order == 2:
            trule = triangle_rule(4)
            vals, _ = _monomials(order, trule.points)
            for d in range(2):
                moments[row] = np.einsum("q,qm->m", trule.weights, vals[:, :, d])
                row += 1
        coef = np.linalg.solve(moments, np.eye(nmono))
        if not np.allclose(moments @ coef, np.eye(nmono), atol=1e-12):
            raise AssertionError("reference moment matrix is not unisolvent")
        return coef

    def vel_basis(self, pts):
        """Reference basis values, shape (npts, nloc_vel, 2)."""
        vals, _ = _monomials(self.order, pts)
        return np.einsum("qmd,ml->qld", vals, self._coef)

    def vel_div(self, pts):
        """Reference basis divergences, shape (npts, nloc_vel)."""
        _, divs = _monomials(self.order, pts)
        return divs @ self._coef

    def pre_basis(self, pts):
        """Pressure basis values, shape (npts, nloc_pre)."""
        pts = np.atleast_2d(pts)
        if self.order == 1:
            return np.ones((pts.shape[0], 1))
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([1.0 - x - y, x, y], axis=1)


@dataclass(frozen=True)
class CellTables:
    """Physical-space basis values tabulated at one reference rule."""

    rule: QuadratureRule
    x_phys: np.ndarray      # (C, Q, 2)
    detjac: np.ndarray      # (C,)
    vel: np.ndarray         # (C, Q, nloc_vel, 2), orientation signs folded in
    div: np.ndarray         # (C, Q, nloc_vel)
    pre: np.ndarray         # (Q, nloc_pre), identical on every cell


class FunctionSpacePair:
    """RT velocity space and discontinuous pressure space on one mesh."""

    def __init__(self, mesh, order=1):
        self.mesh = mesh
        self.order = order
        self.ref = ReferenceElement(order)

        cells = mesh.cells
        verts = mesh.vertices
        d1 = verts[cells[:, 1]] - verts[cells[:, 0]]
        d2 = verts[cells[:, 2]] - verts[cells[:, 0]]
        self.jac = np.stack([d1, d2], axis=-1)            # (C, 2, 2) columns
        self.detjac = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        inv = np.empty_like(self.jac)
        inv[:, 0, 0] = d2[:, 1]
        inv[:, 0, 1] = -d2[:, 0]
        inv[:, 1, 0] = -d1[:, 1]
        inv[:, 1, 1] = d1[:, 0]
        self.jacinv = inv / self.detjac[:, None, None]

        C = mesh.num_cells
        E = mesh.num_edges
        if order == 1:
            self.num_vel_dofs = E
            self.vel_dofmap = mesh.cell_edges.copy()
            self.vel_signs = mesh.cell_edge_signs.astype(float)
            self.num_pre_dofs = C
            self.pre_dofmap = np.arange(C, dtype=np.int64)[:, None]
            bdofs = mesh.boundary_edges.copy()
        else:
            self.num_vel_dofs = 2 * E + 2 * C
            dofmap = np.empty((C, 8), dtype=np.int64)
            signs = np.ones((C, 8))
            for j in range(3):
                dofmap[:, 2 * j] = 2 * mesh.cell_edges[:, j]
                dofmap[:, 2 * j + 1] = 2 * mesh.cell_edges[:, j] + 1
                signs[:, 2 * j] = mesh.cell_edge_signs[:, j]
            dofmap[:, 6] = 2 * E + 2 * np.arange(C)
            dofmap[:, 7] = 2 * E + 2 * np.arange(C) + 1
            self.vel_dofmap = dofmap
            self.vel_signs = signs
            self.num_pre_dofs = 3 * C
            self.pre_dofmap = 3 * np.arange(C, dtype=np.int64)[:, None] + np.arange(3)
            bdofs = np.concatenate([2 * mesh.boundary_edges,
                                    2 * mesh.boundary_edges + 1])
        self.boundary_vel_dofs = np.sort(bdofs)
        mask = np.ones(self.num_vel_dofs, dtype=bool)
        mask[self.boundary_vel_dofs] = False
        self.interior_vel_dofs = np.flatnonzero(mask)
        self._tables = {}

    def tabulate(self, rule):
        """Tabulate physical basis values for all cells at ``rule.points``.

        Results are cached per exactness degree, so repeated assembly at
        the same rule is free.
        """
        key = rule.degree
        cached = self._tables.get(key)
        if cached is not None:
            return cached
        ref_v = self.ref.vel_basis(rule.points)       # (Q, l, 2)
        ref_d = self.ref.vel_div(rule.points)         # (Q, l)
        pre = self.ref.pre_basis(rule.points)         # (Q, lp)
        # Piola: v = J v_ref / det J, div v = div_ref / det J
        vel = np.einsum("cde,qle->cqld", self.jac, ref_v) / self.detjac[:, None, None, None]
        vel *= self.vel_signs[:, None, :, None]
        div = ref_d[None, :, :] / self.detjac[:, None, None]
        div = div * self.vel_signs[:, None, :]
        x0 = self.mesh.vertices[self.mesh.cells[:, 0]]
        x_phys = x0[:, None, :] + np.einsum("cde,qe->cqd", self.jac, rule.points)
        tables = CellTables(rule, x_phys, self.detjac.copy(), vel, div, pre)
        self._tables[key] = tables
        return tables

    def _check_point(self, cell, point):
        if not 0 <= cell < self.mesh.num_cells:
            raise IndexError(f"cell index {cell} out of range")
        x, y = point
        if x < -1e-12 or y < -1e-12 or x + y > 1.0 + 1e-12:
            raise ValueError(f"point {point} outside the reference cell")

    def eval_velocity_basis(self, cell, point):
        """Physical velocity basis values at a reference point of ``cell``,
        shape (nloc_vel, 2)."""
        self._check_point(cell, point)
        ref = self.ref.vel_basis(np.asarray(point, dtype=float)[None, :])[0]
        vals = (self.jac[cell] @ ref.T).T / self.detjac[cell]
        return vals * self.vel_signs[cell][:, None]

    def eval_velocity_div(self, cell, point):
        """Physical divergences of the velocity basis at a reference point,
        shape (nloc_vel,)."""
        self._check_point(cell, point)
        ref = self.ref.vel_div(np.asarray(point, dtype=float)[None, :])[0]
        return ref * self.vel_signs[cell] / self.detjac[cell]

    def map_to_physical(self, cell, points):
        pts = np.atleast_2d(points)
        x0 = self.mesh.vertices[self.mesh.cells[cell, 0]]
        return x0 + pts @ self.jac[cell].T

    def evaluate_velocity(self, coeffs, cell, points):
        """u_h at reference ``points`` of ``cell``, shape (npts, 2)."""
        pts = np.atleast_2d(points)
        ref = self.ref.vel_basis(pts)
        vals = np.einsum("de,qle->qld", self.jac[cell], ref) / self.detjac[cell]
        local = coeffs[self.vel_dofmap[cell]] * self.vel_signs[cell]
        return np.einsum("qld,l->qd", vals, local)

    def evaluate_pressure(self, coeffs, cell, points):
        """eta_h at reference ``points`` of ``cell``, shape (npts,)."""
        pre = self.ref.pre_basis(np.atleast_2d(points))
        return pre @ coeffs[self.pre_dofmap[cell]]


def interpolate_hdiv(space, velocity, edge_points=8, interior_degree=8):
    """Facet-moment interpolant of an analytic velocity field.

    ``velocity`` maps an (N, 2) array of physical points to (N, 2) values.
    DOF values are integrated normal fluxes (and flux moments, order 2)
    over the globally oriented edges, plus interior moments for order 2.
    Reproduces fields already in the velocity space exactly.
    """
    mesh = space.mesh
    erule = edge_rule(edge_points)
    lo = mesh.vertices[mesh.edges[:, 0]]
    hi = mesh.vertices[mesh.edges[:, 1]]
    tang = hi - lo
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.stack([tang[:, 1], -tang[:, 0]], axis=1) / lengths[:, None]

    pts = lo[:, None, :] + erule.points[None, :, None] * tang[:, None, :]
    vals = np.asarray(velocity(pts.reshape(-1, 2))).reshape(mesh.num_edges, -1, 2)
    flux = np.einsum("eqd,ed->eq", vals, normals)

    coeffs = np.zeros(space.num_vel_dofs)
    if space.order == 1:
        coeffs[:] = lengths * (flux @ erule.weights)
        return coeffs

    const = lengths * (flux @ erule.weights)
    lam = _edge_moment_weight(1, erule.points)
    linear = lengths * (flux @ (erule.weights * lam))
    coeffs[2 * np.arange(mesh.num_edges)] = const
    coeffs[2 * np.arange(mesh.num_edges) + 1] = linear

    trule = triangle_rule(interior_degree)
    x0 = mesh.vertices[mesh.cells[:, 0]]
    xq = x0[:, None, :] + np.einsum("cde,qe->cqd", space.jac, trule.points)
    uq = np.asarray(velocity(xq.reshape(-1, 2))).reshape(mesh.num_cells, -1, 2)
    # interior functionals act on the Piola pull-back det(J) J^{-1} u
    pulled = np.einsum("cde,cqe->cqd", space.jacinv, uq) * space.detjac[:, None, None]
    mom = np.einsum("q,cqd->cd", trule.weights, pulled)
    base = 2 * mesh.num_edges
    coeffs[base + 2 * np.arange(mesh.num_cells)] = mom[:, 0]
    coeffs[base + 2 * np.arange(mesh.num_cells) + 1] = mom[:, 1]
    return coeffs


def project_pressure(space, scalar, degree=8):
    """Cellwise L2 projection of an analytic scalar field.

    ``scalar`` maps an (N, 2) array of physical points to (N,) values.
    For order 1 this is the cell mean.
    """
    rule = triangle_rule(degree)
    tables = space.tabulate(rule)
    fq = np.asarray(scalar(tables.x_phys.reshape(-1, 2)))
    fq = fq.reshape(space.mesh.num_cells, -1)
    load = np.einsum("q,cq,qi->ci", rule.weights, fq, tables.pre)
    mass_ref = np.einsum("q,qi,qj->ij", rule.weights, tables.pre, tables.pre)
    coeffs = np.linalg.solve(mass_ref, load.T).T
    out = np.zeros(space.num_pre_dofs)
    out[space.pre_dofmap] = coeffs
    return out


def pressure_cell_means(space, coeffs):
    """Mean value of eta_h per cell (used by zero-mean shifts)."""
    rule = triangle_rule(2)
    tables = space.tabulate(rule)
    vals = np.einsum("qi,ci->cq", tables.pre, coeffs[space.pre_dofmap])
    return (vals @ rule.weights) / (0.5)


def integrate_pressure(space, coeffs):
    """Integral of eta_h over the domain."""
    areas = cell_areas(space.mesh)
    return float(np.dot(pressure_cell_means(space, coeffs), areas))
