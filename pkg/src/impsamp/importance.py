"""Importance sampling machinery: weighted ensembles, effective sample
size, and the Gaussian importance-function scaling study."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import DegenerateWeightsError
from .gaussian import GaussianDensity
from .rng import RngStream


@dataclass
class WeightedEnsemble:
    """M weighted samples; the universal Monte Carlo currency.

    log_weights are unnormalized (weights are typically known only up to a
    constant); normalized weights are computed once in log space.
    """

    samples: np.ndarray
    log_weights: np.ndarray
    normalized_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.log_weights = np.atleast_1d(np.asarray(self.log_weights, dtype=np.float64))
        if self.samples.shape[0] != self.log_weights.shape[0]:
            raise ValueError(
                f"{self.samples.shape[0]} samples but {self.log_weights.shape[0]} log-weights"
            )
        if self.samples.shape[0] == 0:
            raise ValueError("empty ensemble")
        self.normalized_weights = normalize_log_weights(self.log_weights)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def mean(self) -> np.ndarray:
        return self.normalized_weights @ self.samples

    def cov(self) -> np.ndarray:
        dev = self.samples - self.mean()
        return (dev * self.normalized_weights[:, None]).T @ dev


@dataclass
class EssReport:
    M: int
    R_hat: float
    M_eff: float


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    total = logsumexp(log_weights)
    if not np.isfinite(total):
        raise DegenerateWeightsError("all weights are zero (log-sum-exp is -inf)")
    return np.exp(log_weights - total)


def importance_estimate(g, ensemble: WeightedEnsemble) -> float | np.ndarray:
    """Self-normalized estimate sum_i w_i g(X_i).

    g maps the (M, m) sample block to a length-M value array (vectorized
    over rows).
    """
    values = np.asarray(g(ensemble.samples), dtype=np.float64)
    if values.shape[0] != ensemble.n_samples:
        raise ValueError("g must return one value per sample")
    return ensemble.normalized_weights @ values


def ess(ensemble: WeightedEnsemble) -> EssReport:
    """Effective sample size M_eff = M / R with R estimated from the
    normalized weights as M * sum(w_i^2)."""
    w = ensemble.normalized_weights
    M = ensemble.n_samples
    r_hat = float(M * np.sum(w * w))
    return EssReport(M=M, R_hat=r_hat, M_eff=M / r_hat)


def scaling_log_ratio(sigma2: float) -> float:
    """log of the per-dimension sample-cost growth factor sigma^2 / sqrt(2 sigma^2 - 1)."""
    if sigma2 <= 0.5:
        raise ValueError(
            f"importance variance sigma2={sigma2} invalid: weight variance is "
            "infinite for sigma2 <= 1/2"
        )
    return float(np.log(sigma2 / np.sqrt(2.0 * sigma2 - 1.0)))


def gaussian_scaling_study(m_list, sigma2: float, M_eff_target: float):
    """Required sample count M(m) for a target effective sample size when
    sampling N(0, I_m) through the importance function N(0, sigma2 I_m).

    Returns a list of (m, required_M) rows; M grows exponentially in m for
    every valid sigma2 except sigma2 = 1 (importance function equals the
    target).
    """
    log_ratio = scaling_log_ratio(sigma2)
    rows = []
    for m in m_list:
        if m < 0:
            raise ValueError("dimension must be nonnegative")
        rows.append((int(m), float(np.exp(m * log_ratio + np.log(M_eff_target)))))
    return rows


def gaussian_importance_rhat(m: int, sigma2: float, M: int, rng: RngStream) -> float:
    """Empirical R-hat for the Gaussian scaling setup, from M draws."""
    if sigma2 <= 0.5:
        raise ValueError("sigma2 must exceed 1/2")
    proposal = GaussianDensity(np.zeros(m), sigma2 * np.eye(m))
    target = GaussianDensity.standard(m)
    x = proposal.sample(rng, size=M)
    log_w = target.log_density(x) - proposal.log_density(x)
    ensemble = WeightedEnsemble(x, log_w)
    return ess(ensemble).R_hat


def write_scaling_csv(path, rows) -> None:
    """CSV with header m,required_M, one row per dimension."""
    from ._csv import write_csv

    write_csv(path, ["m", "required_M"], rows)
