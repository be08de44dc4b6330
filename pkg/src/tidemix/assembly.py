"""Sparse operators and load functionals of the discrete tidal model.

Velocity mass, divergence and Coriolis matrices are assembled once per
space and cached in an :class:`Operators` bundle; only the damping
residual and its jacobian depend on the state and are rebuilt per
Newton iteration.  The strong condition u.n = 0 is imposed later by
dropping boundary velocity DOFs from the solved system, so everything
here is assembled on the full DOF sets.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import manufactured
from .damping import DampingLaw, regularized_jacobian
from .quadrature import triangle_rule


@dataclass(frozen=True)
class ModelParams:
    """Physical coefficients of the model.

    ``coriolis`` and ``depth`` may be constants or callables of an
    (N, 2) point array.  ``depth_bounds`` records (H_*, H^*); it is
    derived automatically for constant depth.
    """

    rossby: float = 0.1
    burger: float = 0.1
    coriolis: float | Callable = 0.0
    depth: float | Callable = 1.0
    damping: Optional[DampingLaw] = None
    depth_bounds: Optional[tuple] = None

    def __post_init__(self):
        if self.rossby <= 0 or self.burger <= 0:
            raise ValueError("Rossby and Burger numbers must be positive")
        if not callable(self.depth):
            if self.depth <= 0:
                raise ValueError("depth must be positive")
            object.__setattr__(self, "depth_bounds",
                               (float(self.depth), float(self.depth)))
        elif self.depth_bounds is None:
            raise ValueError("callable depth requires explicit depth_bounds")
        elif self.depth_bounds[0] <= 0:
            raise ValueError("depth lower bound must be positive")

    def depth_at(self, x):
        if callable(self.depth):
            return np.asarray(self.depth(x), dtype=float)
        return np.full(np.atleast_2d(x).shape[0], float(self.depth))

    def coriolis_at(self, x):
        if callable(self.coriolis):
            return np.asarray(self.coriolis(x), dtype=float)
        return np.full(np.atleast_2d(x).shape[0], float(self.coriolis))

    @property
    def coriolis_max(self):
        if callable(self.coriolis):
            raise ValueError("callable Coriolis needs an explicit bound")
        return abs(float(self.coriolis))

    @property
    def pressure_factor(self):
        """beta / eps^2, the coefficient of the pressure gradient."""
        return self.burger / self.rossby**2


def _assembly_tables(space):
    return space.tabulate(triangle_rule(2 * space.order + 2))


def _scatter_matrix(space, local, rowmap, colmap, shape):
    rows = np.repeat(rowmap, colmap.shape[1], axis=1).ravel()
    cols = np.tile(colmap, (1, rowmap.shape[1])).reshape(rows.shape)
    # local (C, i, j) pairs row i with col j
    data = local.reshape(local.shape[0], -1).ravel()
    return sp.coo_matrix((data, (rows, cols)), shape=shape).tocsr()


def mass_velocity_weighted(space, params):
    """(1/H)-weighted velocity mass matrix, symmetric positive definite."""
    t = _assembly_tables(space)
    w = t.rule.weights
    invH = 1.0 / params.depth_at(t.x_phys.reshape(-1, 2)).reshape(t.x_phys.shape[:2])
    local = np.einsum("q,c,cq,cqid,cqjd->cij", w, t.detjac, invH, t.vel, t.vel)
    n = space.num_vel_dofs
    return _scatter_matrix(space, local, space.vel_dofmap, space.vel_dofmap, (n, n))


def mass_pressure(space):
    """Pressure mass matrix (block diagonal over cells)."""
    t = _assembly_tables(space)
    local = np.einsum("q,c,qi,qj->cij", t.rule.weights, t.detjac, t.pre, t.pre)
    n = space.num_pre_dofs
    return _scatter_matrix(space, local, space.pre_dofmap, space.pre_dofmap, (n, n))


def divergence_op(space):
    """B[q, i] = integral of (div phi_i) w_q; entries are exactly +-1 for
    the lowest-order pair."""
    t = _assembly_tables(space)
    local = np.einsum("q,c,qi,cqj->cij", t.rule.weights, t.detjac, t.pre, t.div)
    shape = (space.num_pre_dofs, space.num_vel_dofs)
    return _scatter_matrix(space, local, space.pre_dofmap, space.vel_dofmap, shape)


def coriolis_op(space, params):
    """Skew-symmetric rotation operator (1/eps) * (f/H u_perp, v)."""
    t = _assembly_tables(space)
    x = t.x_phys.reshape(-1, 2)
    fac = params.coriolis_at(x) / params.depth_at(x) / params.rossby
    fac = fac.reshape(t.x_phys.shape[:2])
    perp = np.stack([-t.vel[..., 1], t.vel[..., 0]], axis=-1)
    local = np.einsum("q,c,cq,cqjd,cqid->cij",
                      t.rule.weights, t.detjac, fac, perp, t.vel)
    n = space.num_vel_dofs
    return _scatter_matrix(space, local, space.vel_dofmap, space.vel_dofmap, (n, n))


def _velocity_at_quadrature(space, tables, u_coeffs):
    local = u_coeffs[space.vel_dofmap]
    return np.einsum("cqld,cl->cqd", tables.vel, local)


def damping_residual(space, params, u_coeffs):
    """G(u)[i] = integral of g(u_h) . phi_i."""
    law = params.damping
    if law is None:
        return np.zeros(space.num_vel_dofs)
    t = _assembly_tables(space)
    uq = _velocity_at_quadrature(space, t, u_coeffs)
    g = law.eval(uq)
    local = np.einsum("q,c,cqd,cqld->cl", t.rule.weights, t.detjac, g, t.vel)
    out = np.zeros(space.num_vel_dofs)
    np.add.at(out, space.vel_dofmap, local)
    return out


def damping_jacobian(space, params, u_coeffs):
    """Exact derivative of :func:`damping_residual` (sparse)."""
    law = params.damping
    n = space.num_vel_dofs
    if law is None:
        return sp.csr_matrix((n, n))
    t = _assembly_tables(space)
    uq = _velocity_at_quadrature(space, t, u_coeffs)
    dg = regularized_jacobian(law, uq)
    local = np.einsum("q,c,cqid,cqde,cqje->cij",
                      t.rule.weights, t.detjac, t.vel, dg, t.vel)
    return _scatter_matrix(space, local, space.vel_dofmap, space.vel_dofmap, (n, n))


def damping_terms(space, params, u_coeffs):
    """Residual and jacobian in one pass (shared quadrature evaluation)."""
    law = params.damping
    n = space.num_vel_dofs
    if law is None:
        return np.zeros(n), sp.csr_matrix((n, n))
    t = _assembly_tables(space)
    uq = _velocity_at_quadrature(space, t, u_coeffs)
    g = law.eval(uq)
    dg = regularized_jacobian(law, uq)
    wv = np.einsum("q,c,cqld->cqld", t.rule.weights, t.detjac, t.vel)
    res_local = np.einsum("cqd,cqld->cl", g, wv)
    jac_local = np.einsum("cqid,cqde,cqje->cij", wv, dg, t.vel)
    res = np.zeros(n)
    np.add.at(res, space.vel_dofmap, res_local)
    jac = _scatter_matrix(space, jac_local, space.vel_dofmap, space.vel_dofmap, (n, n))
    return res, jac


class DampingKernel:
    """Per-iteration damping assembly, restricted to a DOF subset.

    Precomputes the weighted basis tables and the sparse scatter pattern
    once; each call then costs a few vectorized contractions.  This is
    the Newton-loop fast path; results match :func:`damping_terms`
    restricted to ``active`` up to floating-point reassociation.
    """

    def __init__(self, space, law, active):
        self.space = space
        self.law = law
        self.active = active
        t = _assembly_tables(space)
        ncell, nq, nloc, _ = t.vel.shape
        self._cql = (ncell, nq, nloc)
        # (C, Q, 2, L) so that (q, d)-flattened views feed batched matmul
        self._velT = np.ascontiguousarray(t.vel.transpose(0, 1, 3, 2))
        weighted = t.vel * (t.rule.weights[None, :, None, None]
                            * t.detjac[:, None, None, None])
        self._wvF = np.ascontiguousarray(
            weighted.transpose(0, 2, 1, 3).reshape(ncell, nloc, nq * 2))
        self.dofmap = space.vel_dofmap
        full_to_act = np.full(space.num_vel_dofs, -1, dtype=np.int64)
        full_to_act[active] = np.arange(len(active))
        act = full_to_act[self.dofmap]
        rows = np.repeat(act, nloc, axis=1).ravel()
        cols = np.tile(act, (1, nloc)).ravel()
        self._keep = (rows >= 0) & (cols >= 0)
        self._rows = rows[self._keep]
        self._cols = cols[self._keep]
        self._shape = (len(active), len(active))

    def __call__(self, u_full):
        ncell, nq, nloc = self._cql
        local = u_full[self.dofmap]
        uq = (self._velT.reshape(ncell, nq * 2, nloc)
              @ local[:, :, None]).reshape(ncell, nq, 2)
        g = self.law.eval(uq)
        dg = regularized_jacobian(self.law, uq)
        res_local = (self._wvF @ g.reshape(ncell, nq * 2, 1))[:, :, 0]
        res = np.zeros(self.space.num_vel_dofs)
        np.add.at(res, self.dofmap, res_local)
        h = dg @ self._velT                       # (C, Q, 2, L)
        jac_local = self._wvF @ h.reshape(ncell, nq * 2, nloc)
        jac = sp.coo_matrix(
            (jac_local.ravel()[self._keep], (self._rows, self._cols)),
            shape=self._shape).tocsr()
        return res[self.active], jac


def divergence_xy_moment(space):
    """d[i] = integral of x*y * div(phi_i); the spatial part of the
    synchronization forcing."""
    t = _assembly_tables(space)
    xy = t.x_phys[..., 0] * t.x_phys[..., 1]
    out = np.zeros(space.num_vel_dofs)
    local = np.einsum("q,c,cq,cql->cl", t.rule.weights, t.detjac, xy, t.div)
    np.add.at(out, space.vel_dofmap, local)
    return out


def sync_forcing_functional(space, t, params):
    """(F, v) = (beta/eps^2) sin(t) (x y, div v) as a load vector."""
    mom = getattr(space, "_sync_moment", None)
    if mom is None:
        mom = divergence_xy_moment(space)
        space._sync_moment = mom
    return params.pressure_factor * np.sin(t) * mom


def mms_forcing_functionals(space, t, params):
    """Load vectors (velocity, pressure) for the manufactured solution
    under the given coefficients and damping law."""
    tab = _assembly_tables(space)
    x = tab.x_phys.reshape(-1, 2)
    fu = manufactured.momentum_forcing(params, t, x).reshape(tab.x_phys.shape)
    feta = manufactured.continuity_forcing(t, x).reshape(tab.x_phys.shape[:2])
    vel_rhs = np.zeros(space.num_vel_dofs)
    loc_u = np.einsum("q,c,cqd,cqld->cl", tab.rule.weights, tab.detjac, fu, tab.vel)
    np.add.at(vel_rhs, space.vel_dofmap, loc_u)
    pre_rhs = np.zeros(space.num_pre_dofs)
    loc_p = np.einsum("q,c,cq,qi->ci", tab.rule.weights, tab.detjac, feta, tab.pre)
    np.add.at(pre_rhs, space.pre_dofmap, loc_p)
    return vel_rhs, pre_rhs


@dataclass(frozen=True)
class Operators:
    """Assembled state-independent operators for one space/params pair."""

    space: object
    params: ModelParams
    mass_u: sp.csr_matrix
    mass_p: sp.csr_matrix
    div: sp.csr_matrix
    coriolis: Optional[sp.csr_matrix]

    @property
    def has_rotation(self):
        return self.coriolis is not None


def build_operators(space, params):
    fzero = not callable(params.coriolis) and params.coriolis == 0.0
    return Operators(
        space=space,
        params=params,
        mass_u=mass_velocity_weighted(space, params),
        mass_p=mass_pressure(space),
        div=divergence_op(space),
        coriolis=None if fzero else coriolis_op(space, params),
    )
