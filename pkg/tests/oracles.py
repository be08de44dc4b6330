"""Independent reference computations used to cross-check the library.

Everything here deliberately avoids the library's assembly code paths:
matrices are built entry by entry with per-cell loops and the classic
7-point (degree 5) triangle rule; the lowest-order velocity basis is
evaluated from its closed physical-space form rather than the Piola
pipeline.
"""

import numpy as np

from tidemix.mesh import cell_geometry

# 7-point, degree-5 rule in barycentric coordinates
_SEVEN_A = 0.470142064105115
_SEVEN_B = 0.101286507323456
_SEVEN_POINTS = np.array(
    [(1.0 / 3.0, 1.0 / 3.0)]
    + [(_SEVEN_A, _SEVEN_A), (1 - 2 * _SEVEN_A, _SEVEN_A), (_SEVEN_A, 1 - 2 * _SEVEN_A)]
    + [(_SEVEN_B, _SEVEN_B), (1 - 2 * _SEVEN_B, _SEVEN_B), (_SEVEN_B, 1 - 2 * _SEVEN_B)]
)
_SEVEN_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3
                          + [0.125939180544827] * 3) / 2.0


def cell_quad_points(mesh, cell):
    """Physical 7-point rule on one cell: (points, weights)."""
    v = mesh.vertices[mesh.cells[cell]]
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    pts = v[0] + _SEVEN_POINTS @ J.T
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return pts, _SEVEN_WEIGHTS * det


def rt0_basis_physical(mesh, cell, x):
    """Closed-form lowest-order basis on one cell at physical points x:
    phi_j = sign_j (x - vertex_j) / (2 area)."""
    v = mesh.vertices[mesh.cells[cell]]
    area, _, _ = cell_geometry(mesh, cell)
    signs = mesh.cell_edge_signs[cell]
    x = np.atleast_2d(x)
    out = np.empty((x.shape[0], 3, 2))
    for j in range(3):
        out[:, j, :] = signs[j] * (x - v[j]) / (2.0 * area)
    return out


def rt0_div_physical(mesh, cell):
    area, _, _ = cell_geometry(mesh, cell)
    return mesh.cell_edge_signs[cell] / area


def brute_force_velocity_matrix(space, weight):
    """Entrywise velocity matrix sum_K int weight(x) phi_j . phi_i dx.

    ``weight`` maps points (N, 2) to either scalars (N,) for a weighted
    mass matrix or to (N, 2, 2) matrices applied to phi_j.
    For order 1 the basis comes from the closed form; otherwise from
    pointwise library evaluation (still an independent assembly loop).
    """
    mesh = space.mesh
    n = space.num_vel_dofs
    out = np.zeros((n, n))
    for cell in range(mesh.num_cells):
        pts, wts = cell_quad_points(mesh, cell)
        if space.order == 1:
            basis = rt0_basis_physical(mesh, cell, pts)
        else:
            basis = np.stack([space.eval_velocity_basis(cell, p)
                              for p in _SEVEN_POINTS], axis=0)
        wvals = np.asarray(weight(pts))
        dofs = space.vel_dofmap[cell]
        for a in range(basis.shape[1]):
            for b in range(basis.shape[1]):
                if wvals.ndim == 1:
                    integrand = wvals * np.sum(basis[:, a] * basis[:, b], axis=1)
                else:
                    rotated = np.einsum("qde,qe->qd", wvals, basis[:, b])
                    integrand = np.sum(basis[:, a] * rotated, axis=1)
                out[dofs[a], dofs[b]] += np.dot(wts, integrand)
    return out


def brute_force_divergence_matrix(space):
    mesh = space.mesh
    out = np.zeros((space.num_pre_dofs, space.num_vel_dofs))
    for cell in range(mesh.num_cells):
        pts, wts = cell_quad_points(mesh, cell)
        if space.order == 1:
            divs = np.tile(rt0_div_physical(mesh, cell), (len(wts), 1))
        else:
            divs = np.stack([space.eval_velocity_div(cell, p)
                             for p in _SEVEN_POINTS], axis=0)
        pre = space.ref.pre_basis(_SEVEN_POINTS)
        vdofs = space.vel_dofmap[cell]
        pdofs = space.pre_dofmap[cell]
        for q in range(len(pdofs)):
            for a in range(len(vdofs)):
                out[pdofs[q], vdofs[a]] += np.dot(wts, divs[:, a] * pre[:, q])
    return out


def brute_force_pressure_mass(space):
    mesh = space.mesh
    out = np.zeros((space.num_pre_dofs, space.num_pre_dofs))
    for cell in range(mesh.num_cells):
        _, wts = cell_quad_points(mesh, cell)
        pre = space.ref.pre_basis(_SEVEN_POINTS)
        pdofs = space.pre_dofmap[cell]
        for q in range(len(pdofs)):
            for r in range(len(pdofs)):
                out[pdofs[q], pdofs[r]] += np.dot(wts, pre[:, q] * pre[:, r])
    return out


def brute_force_damping_residual(space, law, coeffs):
    """G(u)[i] by per-cell loops and the 7-point rule."""
    mesh = space.mesh
    out = np.zeros(space.num_vel_dofs)
    for cell in range(mesh.num_cells):
        pts, wts = cell_quad_points(mesh, cell)
        if space.order == 1:
            basis = rt0_basis_physical(mesh, cell, pts)
        else:
            basis = np.stack([space.eval_velocity_basis(cell, p)
                              for p in _SEVEN_POINTS], axis=0)
        dofs = space.vel_dofmap[cell]
        uq = np.einsum("qld,l->qd", basis, coeffs[dofs])
        g = law.eval(uq)
        for a in range(basis.shape[1]):
            out[dofs[a]] += np.dot(wts, np.sum(g * basis[:, a], axis=1))
    return out


def finite_difference_jacobian(func, x, step=1e-6):
    """Central finite differences of a vector function."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x))
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        xp = x.copy()
        xp[j] += step
        xm = x.copy()
        xm[j] -= step
        jac[:, j] = (np.asarray(func(xp)) - np.asarray(func(xm))) / (2 * step)
    return jac


def edge_flux_oracle(mesh, velocity, edge, npoints=10):
    """Integrated normal flux over a global edge via 10-point Gauss."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    ts = 0.5 * (x + 1.0)
    ws = 0.5 * w
    lo, hi = mesh.edges[edge]
    a, b = mesh.vertices[lo], mesh.vertices[hi]
    tang = b - a
    length = np.hypot(*tang)
    normal = np.array([tang[1], -tang[0]]) / length
    pts = a[None, :] + ts[:, None] * tang[None, :]
    flux = np.asarray(velocity(pts)) @ normal
    return length * np.dot(ws, flux)


def rk4_reference(ops, state, dt, nsteps, forcing=None):
    """Explicit RK4 on the method-of-lines ODE (dense solves; tiny meshes
    only).  Independent of the implicit stepper."""
    from tidemix.assembly import damping_residual
    from tidemix.timestep import State

    space = ops.space
    ii = space.interior_vel_dofs
    m = ops.mass_u[ii][:, ii].toarray()
    mp = ops.mass_p.toarray()
    b = ops.div[:, ii].toarray()
    cor = ops.coriolis[ii][:, ii].toarray() if ops.coriolis is not None else None
    pf = ops.params.pressure_factor

    def rhs(t, u_int, eta):
        full = np.zeros(space.num_vel_dofs)
        full[ii] = u_int
        g = damping_residual(space, ops.params, full)[ii]
        r_u = pf * (b.T @ eta) - g
        if cor is not None:
            r_u -= cor @ u_int
        r_eta = -(b @ u_int)
        if forcing is not None:
            f_u, f_eta = forcing(t)
            if f_u is not None:
                r_u += f_u[ii]
            if f_eta is not None:
                r_eta += f_eta
        return np.linalg.solve(m, r_u), np.linalg.solve(mp, r_eta)

    u = state.u[ii].copy()
    eta = state.eta.copy()
    t = state.t
    for _ in range(nsteps):
        k1u, k1e = rhs(t, u, eta)
        k2u, k2e = rhs(t + dt / 2, u + dt / 2 * k1u, eta + dt / 2 * k1e)
        k3u, k3e = rhs(t + dt / 2, u + dt / 2 * k2u, eta + dt / 2 * k2e)
        k4u, k4e = rhs(t + dt, u + dt * k3u, eta + dt * k3e)
        u = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        eta = eta + dt / 6 * (k1e + 2 * k2e + 2 * k3e + k4e)
        t += dt
    full = np.zeros(space.num_vel_dofs)
    full[ii] = u
    return State(t, full, eta)
