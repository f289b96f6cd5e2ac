"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is used when numba is importable and the environment
variable ``IMPSAMP_DISABLE_NUMBA`` is not set to a truthy value
(1/true/yes/on).  Both paths implement the same arithmetic in the same
order, so results agree to round-off; ``benchmarks/bench_kernels.py``
compares their speed.

Kernels here are deliberately low-level (flat arrays, no objects); the
public modules wrap them.
"""

from __future__ import annotations

import importlib.util
import os

import numpy as np

_NUMBA_SPEC = importlib.util.find_spec("numba") is not None
_NB = {}  # lazily compiled numba kernels


def numba_disabled_by_env() -> bool:
    return os.environ.get("IMPSAMP_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
        "on",
    )


def use_numba() -> bool:
    """True when the numba fast path is active for this call."""
    return _NUMBA_SPEC and not numba_disabled_by_env()


# ---------------------------------------------------------------------------
# two-scale Lorenz-96
#
# Resolved x, k = 0..K-1 (cyclic); unresolved y flattened to length K*J with
# the (j, k) -> k*J + j layout, cyclic over the whole length, which encodes
# the wrap y[J, k] == y[0, k+1].
# ---------------------------------------------------------------------------


def _l96_full_rhs_np(x, y, K, J, F, eps, hx, hy):
    z = (hx / J) * y.reshape(K, J).sum(axis=1)
    dx = np.roll(x, 1) * (np.roll(x, -1) - np.roll(x, 2)) - x + F + z
    dy = (np.roll(y, -1) * (np.roll(y, 1) - np.roll(y, -2)) - y + hy * np.repeat(x, J)) / eps
    return dx, dy


@np.errstate(over="ignore", invalid="ignore")  # blow-up is detected, not warned
def _l96_full_integrate_np(x0, y0, K, J, F, eps, hx, hy, dt, n_steps, thin):
    n_snaps = n_steps // thin + 1
    xs = np.empty((n_snaps, K))
    x = x0.copy()
    y = y0.copy()
    xs[0] = x
    for step in range(1, n_steps + 1):
        k1x, k1y = _l96_full_rhs_np(x, y, K, J, F, eps, hx, hy)
        k2x, k2y = _l96_full_rhs_np(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, K, J, F, eps, hx, hy)
        k3x, k3y = _l96_full_rhs_np(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, K, J, F, eps, hx, hy)
        k4x, k4y = _l96_full_rhs_np(x + dt * k3x, y + dt * k3y, K, J, F, eps, hx, hy)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            return xs, x, y, step
        if step % thin == 0:
            xs[step // thin] = x
    return xs, x, y, -1


def _l96_reduced_rhs_np(x, F):
    return np.roll(x, 1, axis=-1) * (np.roll(x, -1, axis=-1) - np.roll(x, 2, axis=-1)) - x + F


def l96_reduced_rk4_step(x, dt, F):
    """One RK4 step of the single-scale system; vectorized over leading axes."""
    k1 = _l96_reduced_rhs_np(x, F)
    k2 = _l96_reduced_rhs_np(x + 0.5 * dt * k1, F)
    k3 = _l96_reduced_rhs_np(x + 0.5 * dt * k2, F)
    k4 = _l96_reduced_rhs_np(x + dt * k3, F)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@np.errstate(over="ignore", invalid="ignore")
def _l96_reduced_integrate_np(x0, F, dt, n_steps, thin):
    n_snaps = n_steps // thin + 1
    xs = np.empty((n_snaps, x0.shape[0]))
    x = x0.copy()
    xs[0] = x
    for step in range(1, n_steps + 1):
        x = l96_reduced_rk4_step(x, dt, F)
        if not np.all(np.isfinite(x)):
            return xs, x, step
        if step % thin == 0:
            xs[step // thin] = x
    return xs, x, -1


def _build_numba_kernels():
    """Compile the numba variants on first use."""
    from numba import njit

    @njit(cache=True)
    def l96_full_rhs(x, y, dx, dy, K, J, F, eps, hx, hy):
        for k in range(K):
            s = 0.0
            base = k * J
            for j in range(J):
                s += y[base + j]
            z = (hx / J) * s
            dx[k] = x[(k - 1) % K] * (x[(k + 1) % K] - x[(k - 2) % K]) - x[k] + F + z
        n = K * J
        for i in range(n):
            k = i // J
            dy[i] = (y[(i + 1) % n] * (y[(i - 1) % n] - y[(i + 2) % n]) - y[i] + hy * x[k]) / eps

    @njit(cache=True)
    def l96_full_integrate(x0, y0, K, J, F, eps, hx, hy, dt, n_steps, thin):
        n_snaps = n_steps // thin + 1
        xs = np.empty((n_snaps, K))
        x = x0.copy()
        y = y0.copy()
        xs[0] = x
        n = K * J
        k1x = np.empty(K); k2x = np.empty(K); k3x = np.empty(K); k4x = np.empty(K)
        k1y = np.empty(n); k2y = np.empty(n); k3y = np.empty(n); k4y = np.empty(n)
        for step in range(1, n_steps + 1):
            l96_full_rhs(x, y, k1x, k1y, K, J, F, eps, hx, hy)
            l96_full_rhs(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, k2x, k2y, K, J, F, eps, hx, hy)
            l96_full_rhs(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, k3x, k3y, K, J, F, eps, hx, hy)
            l96_full_rhs(x + dt * k3x, y + dt * k3y, k4x, k4y, K, J, F, eps, hx, hy)
            x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            ok = True
            for i in range(K):
                if not np.isfinite(x[i]):
                    ok = False
            for i in range(n):
                if not np.isfinite(y[i]):
                    ok = False
            if not ok:
                return xs, x, y, step
            if step % thin == 0:
                xs[step // thin] = x
        return xs, x, y, -1

    @njit(cache=True)
    def l96_reduced_rhs(x, dx, F):
        K = x.shape[0]
        for k in range(K):
            dx[k] = x[(k - 1) % K] * (x[(k + 1) % K] - x[(k - 2) % K]) - x[k] + F

    @njit(cache=True)
    def l96_reduced_integrate(x0, F, dt, n_steps, thin):
        K = x0.shape[0]
        n_snaps = n_steps // thin + 1
        xs = np.empty((n_snaps, K))
        x = x0.copy()
        xs[0] = x
        k1 = np.empty(K); k2 = np.empty(K); k3 = np.empty(K); k4 = np.empty(K)
        for step in range(1, n_steps + 1):
            l96_reduced_rhs(x, k1, F)
            l96_reduced_rhs(x + 0.5 * dt * k1, k2, F)
            l96_reduced_rhs(x + 0.5 * dt * k2, k3, F)
            l96_reduced_rhs(x + dt * k3, k4, F)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            ok = True
            for i in range(K):
                if not np.isfinite(x[i]):
                    ok = False
            if not ok:
                return xs, x, step
            if step % thin == 0:
                xs[step // thin] = x
        return xs, x, -1

    @njit(cache=True)
    def jacobi_sweeps(A, V, tol_off, max_sweeps):
        n = A.shape[0]
        sweeps = 0
        while sweeps < max_sweeps:
            off = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    off += 2.0 * A[i, j] * A[i, j]
            off = np.sqrt(off)
            if off <= tol_off:
                return off, sweeps
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                    if tau >= 0.0:
                        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    for k in range(n):
                        akp = A[k, p]
                        akq = A[k, q]
                        A[k, p] = c * akp - s * akq
                        A[k, q] = s * akp + c * akq
                    for k in range(n):
                        apk = A[p, k]
                        aqk = A[q, k]
                        A[p, k] = c * apk - s * aqk
                        A[q, k] = s * apk + c * aqk
                    for k in range(n):
                        vkp = V[k, p]
                        vkq = V[k, q]
                        V[k, p] = c * vkp - s * vkq
                        V[k, q] = s * vkp + c * vkq
            sweeps += 1
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        return np.sqrt(off), sweeps

    @njit(cache=True)
    def systematic_indices(w, u0):
        M = w.shape[0]
        idx = np.empty(M, np.int64)
        j = 0
        cum = w[0]
        for i in range(M):
            pos = (u0 + i) / M
            while pos >= cum and j < M - 1:
                j += 1
                cum += w[j]
            idx[i] = j
        return idx

    return {
        "l96_full_integrate": l96_full_integrate,
        "l96_reduced_integrate": l96_reduced_integrate,
        "jacobi_sweeps": jacobi_sweeps,
        "systematic_indices": systematic_indices,
    }


def _nb(name):
    if not _NB:
        _NB.update(_build_numba_kernels())
    return _NB[name]


def l96_full_integrate(x0, y0, K, J, F, eps, hx, hy, dt, n_steps, thin=1):
    """RK4 trajectory of the coupled system.

    Returns (x_snapshots, x_final, y_final, blowup_step); blowup_step is -1
    when the whole trajectory stayed finite.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    if use_numba():
        return _nb("l96_full_integrate")(
            x0, y0, K, J, float(F), float(eps), float(hx), float(hy), float(dt), n_steps, thin
        )
    return _l96_full_integrate_np(x0, y0, K, J, float(F), float(eps), float(hx), float(hy), float(dt), n_steps, thin)


def l96_reduced_integrate(x0, F, dt, n_steps, thin=1):
    """RK4 trajectory of the single-scale system: (snapshots, final, blowup_step)."""
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if use_numba():
        return _nb("l96_reduced_integrate")(x0, float(F), float(dt), n_steps, thin)
    return _l96_reduced_integrate_np(x0, float(F), float(dt), n_steps, thin)


def _jacobi_sweeps_np(A, V, tol_off, max_sweeps):
    n = A.shape[0]
    sweeps = 0
    while sweeps < max_sweeps:
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= tol_off:
            return off, sweeps
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
    off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
    return off, sweeps


def jacobi_sweeps(A, V, tol_off, max_sweeps):
    """Cyclic Jacobi rotations in place; returns (off_residual, sweeps)."""
    if use_numba():
        return _nb("jacobi_sweeps")(A, V, float(tol_off), max_sweeps)
    return _jacobi_sweeps_np(A, V, float(tol_off), max_sweeps)


def _systematic_indices_np(w, u0):
    M = w.shape[0]
    pos = (u0 + np.arange(M)) / M
    idx = np.searchsorted(np.cumsum(w), pos, side="right")
    return np.minimum(idx, M - 1).astype(np.int64)


def systematic_indices(w, u0):
    """Offspring indices of a systematic (single-uniform stratified) sweep."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    if use_numba():
        return _nb("systematic_indices")(w, float(u0))
    return _systematic_indices_np(w, float(u0))
