"""Multivariate Gaussian densities with cached Cholesky factors."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import CholeskyError
from .linalg import cholesky_psd, symmetrize
from .rng import RngStream

_LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianDensity:
    """N(mean, cov) with the lower Cholesky factor of cov cached.

    cov may be positive semi-definite; sampling then stays on the affine
    support, while density evaluation raises because the density does not
    exist on the degenerate subspace.
    """

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        cov = np.asarray(cov, dtype=np.float64)
        if cov.ndim == 0:
            cov = cov.reshape(1, 1)
        self.cov = symmetrize(cov)
        if self.mean.ndim != 1 or self.cov.shape[0] != self.mean.shape[0]:
            raise ValueError(
                f"mean of length {self.mean.shape} incompatible with cov {self.cov.shape}"
            )
        self.chol, self.rank = cholesky_psd(self.cov)
        if self.rank == self.dim:
            self.log_det = 2.0 * float(np.sum(np.log(np.diag(self.chol))))
        else:
            self.log_det = -np.inf

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def standard(cls, dim: int) -> "GaussianDensity":
        return cls(np.zeros(dim), np.eye(dim))

    def sample(self, rng: RngStream, size: int | None = None) -> np.ndarray:
        """Draw mean + L xi with xi standard normal; (size, dim) when size given."""
        gen = rng.generator()
        shape = (self.dim,) if size is None else (size, self.dim)
        xi = gen.standard_normal(shape)
        return self.mean + xi @ self.chol.T

    def log_density(self, x) -> float | np.ndarray:
        """Gaussian log-density via triangular solves; batched over rows."""
        if self.rank < self.dim:
            raise CholeskyError("log-density undefined: covariance is degenerate")
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point of dimension {x.shape[-1]} for a {self.dim}-d density")
        dev = np.atleast_2d(x) - self.mean
        with np.errstate(over="ignore", invalid="ignore"):
            # far-tail points legitimately overflow to -inf log-density
            y = solve_triangular(self.chol, dev.T, lower=True)
            q = np.sum(y * y, axis=0)
            out = -0.5 * q - 0.5 * self.log_det - 0.5 * self.dim * _LOG_2PI
        return float(out[0]) if x.ndim == 1 else out


def sample_gaussian(d: GaussianDensity, rng: RngStream, size: int | None = None) -> np.ndarray:
    return d.sample(rng, size)


def log_density(d: GaussianDensity, x) -> float | np.ndarray:
    return d.log_density(x)
