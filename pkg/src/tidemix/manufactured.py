"""Closed-form manufactured fields for convergence studies.

The velocity is a separable trigonometric field with zero normal trace
on the unit square, the elevation a zero-mean double sine; both carry a
cos(pi t) time factor.  Forcing terms are the residuals of substituting
these fields into the model equations, spelled out by hand so no
symbolic machinery is needed at runtime.
"""

import numpy as np


def velocity(t):
    c = np.cos(np.pi * t)

    def u(x):
        x = np.atleast_2d(x)
        sx, cx = np.sin(np.pi * x[:, 0]), np.cos(np.pi * x[:, 0])
        sy, cy = np.sin(np.pi * x[:, 1]), np.cos(np.pi * x[:, 1])
        return c * np.stack([sx * cy, cx * sy], axis=-1)

    return u


def elevation(t):
    c = np.cos(np.pi * t)

    def eta(x):
        x = np.atleast_2d(x)
        return c * np.sin(np.pi * x[:, 0]) * np.sin(2.0 * np.pi * x[:, 1])

    return eta


def velocity_time_derivative(t, x):
    s = -np.pi * np.sin(np.pi * t)
    sx, cx = np.sin(np.pi * x[:, 0]), np.cos(np.pi * x[:, 0])
    sy, cy = np.sin(np.pi * x[:, 1]), np.cos(np.pi * x[:, 1])
    return s * np.stack([sx * cy, cx * sy], axis=-1)


def elevation_gradient(t, x):
    c = np.cos(np.pi * t)
    sx, cx = np.sin(np.pi * x[:, 0]), np.cos(np.pi * x[:, 0])
    s2y, c2y = np.sin(2.0 * np.pi * x[:, 1]), np.cos(2.0 * np.pi * x[:, 1])
    return c * np.pi * np.stack([cx * s2y, 2.0 * sx * c2y], axis=-1)


def velocity_divergence(t, x):
    c = np.cos(np.pi * t)
    return 2.0 * np.pi * c * np.cos(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])


def elevation_time_derivative(t, x):
    s = -np.pi * np.sin(np.pi * t)
    return s * np.sin(np.pi * x[:, 0]) * np.sin(2.0 * np.pi * x[:, 1])


def momentum_forcing(params, t, x):
    """Residual of the momentum equation at points ``x``, shape (N, 2)."""
    x = np.atleast_2d(x)
    u = velocity(t)(x)
    H = params.depth_at(x)
    out = velocity_time_derivative(t, x) / H[:, None]
    f = params.coriolis_at(x)
    if np.any(f != 0.0):
        perp = np.stack([-u[:, 1], u[:, 0]], axis=-1)
        out += (f / (H * params.rossby))[:, None] * perp
    out += (params.burger / params.rossby**2) * elevation_gradient(t, x)
    if params.damping is not None:
        out += params.damping.eval(u)
    return out


def continuity_forcing(t, x):
    """Residual of the continuity equation at points ``x``, shape (N,)."""
    x = np.atleast_2d(x)
    return elevation_time_derivative(t, x) + velocity_divergence(t, x)
