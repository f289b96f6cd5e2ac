"""Stationary time-series characterization: autocorrelation and AR fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError


def autocovariance(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocovariance estimator c_tau (normalization 1/N)."""
    z = np.asarray(series, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = z.size
    if n <= max_lag:
        raise ValueError(f"series of length {n} too short for max_lag={max_lag}")
    dev = z - z.mean()
    c = np.empty(max_lag + 1)
    for tau in range(max_lag + 1):
        c[tau] = dev[: n - tau] @ dev[tau:] / n
    return c


def _check_variance(c0: float, series: np.ndarray) -> None:
    # a constant series can leave c0 at round-off level rather than exactly 0
    floor = 1e-28 * (1.0 + float(np.mean(series * series)))
    if c0 <= floor:
        raise ValueError("zero-variance series has no autocorrelation structure")


def autocorrelation(series: np.ndarray, max_lag: int) -> np.ndarray:
    """acf(tau) = c_tau / c_0 for tau = 0..max_lag; acf(0) = 1."""
    c = autocovariance(series, max_lag)
    _check_variance(c[0], np.asarray(series, dtype=np.float64))
    return c / c[0]


@dataclass
class ArFit:
    """AR(p) representation chosen by AIC over orders 0..order_max."""

    order: int
    coefficients: np.ndarray
    innovation_variance: float
    aic: np.ndarray  # per candidate order


def fit_ar(series: np.ndarray, order_max: int) -> ArFit:
    """Yule-Walker fit per order, order selected by AIC.

    AIC(p) = N log(sigma_p^2) + 2p with sigma_p^2 the innovation variance
    from the autocovariance recursion.
    """
    z = np.asarray(series, dtype=np.float64)
    n = z.size
    c = autocovariance(z, order_max)
    if c[0] <= 0.0:
        raise ValueError("zero-variance series cannot be fit")
    aics = np.empty(order_max + 1)
    fits = []
    for p in range(order_max + 1):
        if p == 0:
            coeffs = np.zeros(0)
            sigma2 = c[0]
        else:
            toeplitz = np.array([[c[abs(i - j)] for j in range(p)] for i in range(p)])
            try:
                coeffs = np.linalg.solve(toeplitz, c[1 : p + 1])
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"singular autocovariance matrix at AR order {p}"
                ) from exc
            sigma2 = float(c[0] - coeffs @ c[1 : p + 1])
        if sigma2 <= 0.0:
            aics[p] = np.inf
        else:
            aics[p] = n * np.log(sigma2) + 2.0 * p
        fits.append((coeffs, sigma2))
    best = int(np.argmin(aics))
    coeffs, sigma2 = fits[best]
    return ArFit(order=best, coefficients=coeffs, innovation_variance=sigma2, aic=aics)
