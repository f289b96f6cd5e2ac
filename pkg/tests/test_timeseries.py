"""Autocorrelation estimation and Yule-Walker AR fits."""

import numpy as np
import pytest

from impsamp import autocorrelation, autocovariance, fit_ar


def ar_process(coeffs, n, seed, sigma=1.0):
    rng = np.random.default_rng(seed)
    p = len(coeffs)
    z = np.zeros(n + 200)
    for i in range(p, len(z)):
        z[i] = np.dot(coeffs, z[i - p : i][::-1]) + sigma * rng.standard_normal()
    return z[200:]


class TestAutocorrelation:
    def test_lag_zero_is_one(self):
        z = np.random.default_rng(0).standard_normal(500)
        acf = autocorrelation(z, 20)
        assert acf[0] == 1.0
        assert np.all(np.abs(acf) <= 1.0 + 1e-12)

    def test_constant_series_raises(self):
        with pytest.raises(ValueError):
            autocorrelation(np.full(100, 3.14), 10)

    def test_white_noise_stays_in_band(self):
        n = 100_000
        z = np.random.default_rng(1).standard_normal(n)
        acf = autocorrelation(z, 100)
        band = 4.0 / np.sqrt(n)
        assert np.all(np.abs(acf[1:]) < band)

    def test_ar1_decay(self):
        n = 100_000
        z = ar_process([0.9], n, seed=2)
        acf = autocorrelation(z, 30)
        band = 4.0 / np.sqrt(n)
        for tau in range(1, 10):
            assert abs(acf[tau] - 0.9**tau) < 5 * band

    def test_matches_brute_force_double_loop(self):
        z = np.random.default_rng(3).standard_normal(1000)
        max_lag = 12
        acf = autocorrelation(z, max_lag)
        dev = z - z.mean()
        denom = np.sum(dev * dev)
        for tau in range(max_lag + 1):
            num = 0.0
            for i in range(len(z) - tau):
                num += dev[i] * dev[i + tau]
            assert acf[tau] == pytest.approx(num / denom, abs=1e-14)

    def test_max_lag_bounds(self):
        with pytest.raises(ValueError):
            autocorrelation(np.arange(10.0), 10)


class TestFitAr:
    def test_white_noise_selects_order_zero(self):
        z = np.random.default_rng(4).standard_normal(50_000)
        fit = fit_ar(z, order_max=6)
        assert fit.order == 0
        assert fit.innovation_variance == pytest.approx(z.var(), rel=0.02)

    def test_recovers_ar2_coefficients(self):
        z = ar_process([0.5, -0.3], 100_000, seed=5)
        fit = fit_ar(z, order_max=6)
        assert fit.order >= 2
        np.testing.assert_allclose(fit.coefficients[:2], [0.5, -0.3], atol=0.02)
        assert fit.innovation_variance == pytest.approx(1.0, rel=0.05)

    def test_aic_vector_covers_all_orders(self):
        z = ar_process([0.7], 5000, seed=6)
        fit = fit_ar(z, order_max=4)
        assert fit.aic.shape == (5,)
        assert fit.order == int(np.argmin(fit.aic))

    def test_zero_variance_raises(self):
        with pytest.raises(ValueError):
            fit_ar(np.zeros(100), order_max=3)

    def test_autocovariance_normalization(self):
        z = np.random.default_rng(7).standard_normal(10_000)
        c = autocovariance(z, 0)
        assert c[0] == pytest.approx(z.var(), rel=1e-12)
