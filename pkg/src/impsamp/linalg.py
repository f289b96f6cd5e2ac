"""Dense symmetric linear algebra.

Cholesky factorization (with positive semi-definite support), a cyclic
Jacobi eigensolver, Frobenius norms, and the steady-state solution of the
discrete filtering Riccati equation by fixed-point iteration of the
one-step covariance update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from . import _kernels
from .exceptions import CholeskyError, JacobiConvergenceError, RiccatiConvergenceError


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Exactly symmetric copy of a square matrix: 0.5 * (a + a.T).

    Floating-point addition commutes, so the result satisfies
    ``out[i, j] == out[j, i]`` bit for bit.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def is_symmetric(a: np.ndarray) -> bool:
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.array_equal(a, a.T)


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), "fro"))


def cholesky_psd(a: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """Lower-triangular L with L @ L.T == a for symmetric PSD a.

    Positive definite input takes the LAPACK fast path.  Semi-definite
    input (zero eigenvalues) gets zero rows in L.  Returns (L, rank);
    raises CholeskyError when a is not PSD to working precision.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    try:
        return np.linalg.cholesky(a), n
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.max(np.abs(np.diag(a)))), 1.0) if n else 1.0
    L = np.zeros_like(a)
    rank = 0
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d > tol * scale:
            L[j, j] = np.sqrt(d)
            if j + 1 < n:
                L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
            rank += 1
        elif d >= -tol * scale:
            L[j, j] = 0.0
        else:
            raise CholeskyError(f"matrix is not positive semi-definite (pivot {j}: {d:.3e})")
    resid = frobenius_norm(L @ L.T - a)
    if resid > 1e-9 * max(1.0, frobenius_norm(a)):
        raise CholeskyError(f"matrix is not positive semi-definite (residual {resid:.3e})")
    return L, rank


@dataclass
class Spectrum:
    """Eigenvalues sorted descending, with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def jacobi_eigen(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> Spectrum:
    """Full spectrum of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below
    ``tol * ||a||_F``; non-convergence raises JacobiConvergenceError
    carrying the residual.
    """
    a = np.asarray(a, dtype=np.float64)
    if not is_symmetric(a):
        raise ValueError("jacobi_eigen requires an exactly symmetric matrix")
    n = a.shape[0]
    norm = frobenius_norm(a)
    if norm == 0.0:
        return Spectrum(np.zeros(n), np.eye(n))
    A = a.copy()
    V = np.eye(n)
    off, sweeps = _kernels.jacobi_sweeps(A, V, tol * norm, max_sweeps)
    if off > tol * norm:
        raise JacobiConvergenceError(off, sweeps)
    eigs = np.diag(A).copy()
    order = np.argsort(-eigs)
    return Spectrum(eigs[order], V[:, order])


def riccati_steady_state(
    A: np.ndarray,
    H: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tol: float = 1e-12,
    max_iters: int = 10**6,
) -> np.ndarray:
    """Steady-state posterior covariance of the discrete Kalman recursion.

    Iterates X <- A P A' + Q, K <- X H' (H X H' + R)^-1, P <- (I - K H) X
    from P0 = Q until ||P_new - P||_F < tol * max(1, ||P_new||_F).
    """
    A = np.asarray(A, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    Q = symmetrize(Q)
    R = symmetrize(R)
    m = A.shape[0]
    eye = np.eye(m)
    P = Q.copy()
    for it in range(1, max_iters + 1):
        X = symmetrize(A @ P @ A.T + Q)
        S = symmetrize(H @ X @ H.T + R)
        try:
            cS = np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise CholeskyError("singular innovation covariance in Riccati iteration") from exc
        K = cho_solve((cS, True), H @ X).T
        P_new = symmetrize((eye - K @ H) @ X)
        resid = frobenius_norm(P_new - P)
        if resid < tol * max(1.0, frobenius_norm(P_new)):
            return P_new
        P = P_new
    raise RiccatiConvergenceError(resid, max_iters, last_iterate=P)
