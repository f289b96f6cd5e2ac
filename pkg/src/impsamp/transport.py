"""One-dimensional optimal transport map defined by an ODE.

Integrating du/dt = g(t) / f(u) from u(0) = 0 pushes the reference
density g forward onto the target f exactly, with Jacobian
dx/dxi = g(xi) / f(x).  Both densities must be normalized and share their
mode at 0; a wrong normalization constant silently puts the samples in
the wrong place, which is precisely why this construction is rarely worth
it compared to weighted sampling.
"""

from __future__ import annotations

import numpy as np

from .exceptions import IntegrationError

_MIN_STEP = 1e-14


def _rk4_step(f, g, t, u, h):
    k1 = g(t) / f(u)
    k2 = g(t + 0.5 * h) / f(u + 0.5 * h * k1)
    k3 = g(t + 0.5 * h) / f(u + 0.5 * h * k2)
    k4 = g(t + h) / f(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_to_targets(f, g, targets, tol, max_steps):
    """Advance one trajectory through increasing |targets| (all same sign).

    Adaptive RK4 with step doubling; local error controlled to
    tol * h * max(1, |u|) so the accumulated error stays ~tol * |xi|.
    """
    out = np.empty(len(targets))
    sign = 1.0 if targets[-1] >= 0 else -1.0
    t = 0.0
    u = 0.0
    h = max(abs(targets[-1]) / 64.0, 16 * _MIN_STEP) * sign
    steps = 0
    for i, target in enumerate(targets):
        while sign * (target - t) > 1e-15 * max(1.0, abs(target)):
            if steps >= max_steps:
                raise IntegrationError(f"transport map exceeded {max_steps} steps", step=steps)
            if sign * h > sign * (target - t):
                h = target - t
            u_full = _rk4_step(f, g, t, u, h)
            u_half = _rk4_step(f, g, t, u, 0.5 * h)
            u_two = _rk4_step(f, g, t + 0.5 * h, u_half, 0.5 * h)
            if not (np.isfinite(u_full) and np.isfinite(u_two)):
                raise IntegrationError(
                    f"non-finite transport map state near t={t:.6g}", step=steps
                )
            err = abs(u_two - u_full) / 15.0
            allowed = tol * abs(h) * max(1.0, abs(u))
            if err <= allowed:
                t = t + h
                u = u_two + (u_two - u_full) / 15.0
                grow = 2.0 if err == 0.0 else min(2.0, 0.9 * (allowed / err) ** 0.2)
                h = h * grow
            else:
                h = h * max(0.1, 0.9 * (allowed / err) ** 0.25)
            if abs(h) < _MIN_STEP:
                raise IntegrationError(
                    f"transport map step underflow near t={t:.6g}", step=steps
                )
            steps += 1
        out[i] = u
    return out


def ode_transport_map_1d(f, g, xi: float, tol: float = 1e-8, max_steps: int = 10**6,
                         clip: float = 8.0):
    """Map a reference draw xi to (x, jacobian) with x = u(xi).

    f and g are normalized 1-D densities with a common mode at 0; f must
    be strictly positive along the integration range.  xi is clipped to
    [-clip, clip] since tails beyond that carry no mass at double
    precision.
    """
    xi = float(np.clip(xi, -clip, clip))
    if xi == 0.0:
        x = 0.0
    else:
        x = float(_integrate_to_targets(f, g, np.array([xi]), tol, max_steps)[0])
    fx = f(x)
    if fx <= 0 or not np.isfinite(fx):
        raise IntegrationError(f"target density not positive at mapped point x={x:.6g}")
    return x, g(xi) / fx


def ode_transport_map_batch(f, g, xis, tol: float = 1e-8, max_steps: int = 10**6,
                            clip: float = 8.0) -> np.ndarray:
    """Map many reference draws along the two shared trajectories.

    All positive xis lie on one solution curve of the ODE and all negative
    ones on another, so one integration per sign suffices.
    """
    xis = np.clip(np.asarray(xis, dtype=np.float64), -clip, clip)
    out = np.zeros_like(xis)
    for sign in (1.0, -1.0):
        mask = (xis * sign) > 0
        if not np.any(mask):
            continue
        order = np.argsort(sign * xis[mask])
        targets = xis[mask][order]
        values = _integrate_to_targets(f, g, targets, tol, max_steps)
        dest = np.where(mask)[0][order]
        out[dest] = values
    return out
