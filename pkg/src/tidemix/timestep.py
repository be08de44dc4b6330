"""Implicit midpoint (Crank-Nicolson) integration with Newton iteration.

One step solves, with bars denoting midpoint averages and pf = beta/eps^2,

    M (u+ - u)/dt + C ubar + G(ubar) - pf * B^T etabar = F_u(tmid)
    Mp (eta+ - eta)/dt + B ubar                        = F_eta(tmid)

on the interior velocity DOFs (boundary DOFs are pinned to zero).  The
damping term is evaluated at the midpoint average, which preserves the
discrete energy relation: the midpoint rule then conserves energy
exactly for g = F = 0 and dissipates (G(ubar), ubar) >= 0 per step for
monotone laws.

The pressure mass matrix is block diagonal, so each Newton update is
solved on the exactly pressure-reduced velocity system

    [M/dt + C/2 + G'(ubar)/2 + (pf dt/4) B^T Mp^-1 B] du = rhs,

by direct factorization (default) or conjugate gradients (rotation-free
problems only, where the reduced operator is symmetric definite).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import diagnostics, manufactured
from .assembly import DampingKernel, damping_jacobian
from .femspace import integrate_pressure, interpolate_hdiv, project_pressure


class NewtonError(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""


class LinearSolverError(RuntimeError):
    """Inner linear solve failed."""


@dataclass
class State:
    t: float
    u: np.ndarray
    eta: np.ndarray

    def copy(self):
        return State(self.t, self.u.copy(), self.eta.copy())


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_solver: str = "direct"   # "direct" or "cg" (both pressure-reduced)
    linear_tol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.newton_tol <= 0 or self.linear_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.linear_solver not in ("direct", "cg"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


@dataclass(frozen=True)
class StepStats:
    iterations: int
    residual: float
    dissipation: float       # (G(ubar), ubar)
    forcing_power: float     # (F, ubar) (+ pressure forcing work, if any)


def _block_diag_inverse(mat, block):
    """Inverse of a block-diagonal sparse matrix with fixed block size."""
    n = mat.shape[0]
    if block == 1:
        return sp.diags(1.0 / mat.diagonal()).tocsr()
    mat = mat.tocsc()
    blocks = [np.linalg.inv(mat[s:s + block, s:s + block].toarray())
              for s in range(0, n, block)]
    return sp.block_diag(blocks, format="csr")


class Stepper:
    """Reusable stepper: caches restricted operators, the Schur term and,
    for affine damping, the factorized Newton matrix."""

    def __init__(self, ops, config):
        self.ops = ops
        self.config = config
        space = ops.space
        self.space = space
        self.params = ops.params
        ii = space.interior_vel_dofs
        self.interior = ii
        self.mass_ii = ops.mass_u[ii][:, ii].tocsr()
        self.div_i = ops.div[:, ii].tocsr()
        self.divT_i = self.div_i.T.tocsr()
        self.mass_p = ops.mass_p.tocsr()
        self.mass_p_inv = _block_diag_inverse(self.mass_p, space.ref.nloc_pre)
        self.cor_ii = None
        if ops.coriolis is not None:
            self.cor_ii = ops.coriolis[ii][:, ii].tocsr()
            if config.linear_solver == "cg":
                raise ValueError("cg solver requires zero rotation "
                                 "(the reduced operator must stay symmetric)")

        dt = config.dt
        pf = self.params.pressure_factor
        base = self.mass_ii / dt \
            + (pf * dt / 4.0) * (self.divT_i @ self.mass_p_inv @ self.div_i)
        if self.cor_ii is not None:
            base = base + 0.5 * self.cor_ii

        law = self.params.damping
        self._affine = law is None or law.kind == "linear"
        self._lu = None
        self._g_const = None
        self._kernel = None
        if self._affine:
            if law is not None:
                gj = damping_jacobian(space, self.params,
                                      np.zeros(space.num_vel_dofs))
                self._g_const = gj[ii][:, ii].tocsr()
                base = base + 0.5 * self._g_const
        else:
            self._kernel = DampingKernel(space, law, ii)
        self._base = base.tocsr()

    # -- one Newton residual/jacobian evaluation ------------------------

    def _residual(self, state, u_new, eta_new, f_u, f_eta):
        dt = self.config.dt
        pf = self.params.pressure_factor
        ii = self.interior
        u_old = state.u[ii]
        ubar = 0.5 * (u_old + u_new)
        ebar = 0.5 * (state.eta + eta_new)

        if self._affine:
            gjac = None
            g_int = self._g_const @ ubar if self._g_const is not None \
                else np.zeros(len(ii))
        else:
            ubar_full = np.zeros(self.space.num_vel_dofs)
            ubar_full[ii] = ubar
            g_int, gjac = self._kernel(ubar_full)

        r_u = self.mass_ii @ ((u_new - u_old) / dt) + g_int \
            - pf * (self.divT_i @ ebar)
        if self.cor_ii is not None:
            r_u += self.cor_ii @ ubar
        if f_u is not None:
            r_u -= f_u[ii]
        r_eta = self.mass_p @ ((eta_new - state.eta) / dt) + self.div_i @ ubar
        if f_eta is not None:
            r_eta -= f_eta
        return r_u, r_eta, gjac, ubar, g_int

    def _solve_update(self, gjac, r_u, r_eta):
        dt = self.config.dt
        pf = self.params.pressure_factor
        rhs = -r_u - (pf * dt / 2.0) * (self.divT_i @ (self.mass_p_inv @ r_eta))
        reduced = self._base if gjac is None else self._base + 0.5 * gjac
        if self.config.linear_solver == "direct":
            if self._affine and self._lu is not None:
                du = self._lu.solve(rhs)
            else:
                try:
                    lu = spla.splu(reduced.tocsc())
                except RuntimeError as exc:
                    raise LinearSolverError(str(exc)) from exc
                if self._affine:
                    self._lu = lu
                du = lu.solve(rhs)
        else:
            du, info = spla.cg(reduced, rhs, rtol=0.0,
                               atol=self.config.linear_tol,
                               maxiter=20 * len(rhs))
            if info != 0:
                raise LinearSolverError(f"cg failed to converge (info={info})")
        deta = dt * (self.mass_p_inv @ (-r_eta - 0.5 * (self.div_i @ du)))
        return du, deta

    # -- stepping -------------------------------------------------------

    def step(self, state, forcing=None, guess=None):
        """Advance one step; returns (new_state, StepStats).

        ``guess`` optionally seeds Newton with a predicted new state
        (u on interior DOFs, eta); the converged result is independent
        of it up to the Newton tolerance.
        """
        cfg = self.config
        dt = cfg.dt
        tmid = state.t + 0.5 * dt
        f_u = f_eta = None
        if forcing is not None:
            f_u, f_eta = forcing(tmid)

        ii = self.interior
        if guess is None:
            u_new = state.u[ii].copy()
            eta_new = state.eta.copy()
        else:
            u_new = guess[0].copy()
            eta_new = guess[1].copy()
        iterations = 0
        for k in range(cfg.newton_max_iter + 1):
            r_u, r_eta, gjac, ubar, g_int = self._residual(
                state, u_new, eta_new, f_u, f_eta)
            residual = float(np.sqrt(np.dot(r_u, r_u) + np.dot(r_eta, r_eta)))
            if residual < cfg.newton_tol:
                iterations = k
                break
            if k == cfg.newton_max_iter:
                raise NewtonError(
                    f"Newton stalled at t={state.t:.6g}: residual "
                    f"{residual:.3e} after {k} iterations "
                    f"(tol {cfg.newton_tol:.1e})")
            du, deta = self._solve_update(gjac, r_u, r_eta)
            u_new += du
            eta_new += deta

        ebar = 0.5 * (state.eta + eta_new)
        dissipation = float(np.dot(g_int, ubar))
        power = 0.0
        if f_u is not None:
            power += float(np.dot(f_u[ii], ubar))
        if f_eta is not None:
            power += self.params.pressure_factor * float(np.dot(f_eta, ebar))

        u_full = np.zeros(self.space.num_vel_dofs)
        u_full[ii] = u_new
        new = State(state.t + dt, u_full, eta_new)
        return new, StepStats(iterations, residual, dissipation, power)


def step(state, config, operators, forcing=None):
    """Single Crank-Nicolson step (convenience wrapper; loops should use
    :class:`Stepper` or :func:`simulate`, which reuse factorizations)."""
    new, _ = Stepper(operators, config).step(state, forcing)
    return new


def simulate(operators, config, state, t_final, forcing=None, observer=None):
    """Run until ``t_final``; returns (EnergyTrace, final_state).

    ``observer(state)`` is invoked at the initial time and after every
    step, e.g. to accumulate error norms.  Newton is seeded with a
    linear extrapolation of the previous step.
    """
    stepper = Stepper(operators, config)
    ii = operators.space.interior_vel_dofs
    nsteps = int(round((t_final - state.t) / config.dt))
    rows_t = np.empty(nsteps + 1)
    rows_e = np.empty(nsteps + 1)
    rows_d = np.zeros(nsteps + 1)
    rows_p = np.zeros(nsteps + 1)
    rows_t[0] = state.t
    rows_e[0] = diagnostics.energy(state, operators)
    if observer is not None:
        observer(state)
    prev = None
    for k in range(nsteps):
        guess = None
        if prev is not None:
            guess = (2.0 * state.u[ii] - prev.u[ii], 2.0 * state.eta - prev.eta)
        prev = state
        state, stats = stepper.step(state, forcing, guess=guess)
        rows_t[k + 1] = state.t
        rows_e[k + 1] = diagnostics.energy(state, operators)
        rows_d[k + 1] = stats.dissipation
        rows_p[k + 1] = stats.forcing_power
        if observer is not None:
            observer(state)
    meta = {
        "n": operators.space.mesh.n,
        "order": operators.space.order,
        "dt": config.dt,
        "rossby": operators.params.rossby,
        "burger": operators.params.burger,
    }
    trace = diagnostics.EnergyTrace(rows_t, rows_e, rows_d, rows_p, meta)
    return trace, state


# -- initial conditions ------------------------------------------------


def random_initial_state(operators, seed):
    """Uniform random DOF draw, shifted to zero-mean elevation and scaled
    to unit energy.  Deterministic per seed (PCG64 generator)."""
    space = operators.space
    for attempt in range(16):
        rng = np.random.default_rng(seed + attempt)
        u = np.zeros(space.num_vel_dofs)
        u[space.interior_vel_dofs] = rng.uniform(
            -1.0, 1.0, len(space.interior_vel_dofs))
        eta = rng.uniform(-1.0, 1.0, space.num_pre_dofs)
        eta -= integrate_pressure(space, eta)  # domain area is 1
        state = State(0.0, u, eta)
        e0 = diagnostics.energy(state, operators)
        if e0 > 0.0:
            scale = 1.0 / np.sqrt(e0)
            state.u *= scale
            state.eta *= scale
            return state
    raise RuntimeError("random draw degenerate for 16 consecutive seeds")


def mms_initial_state(space, t=0.0):
    """Facet interpolant / L2 projection of the manufactured fields."""
    u = interpolate_hdiv(space, manufactured.velocity(t))
    u[space.boundary_vel_dofs] = 0.0
    eta = project_pressure(space, manufactured.elevation(t))
    return State(t, u, eta)
