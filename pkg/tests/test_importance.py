"""Weighted ensembles, effective sample size, and the scaling study."""

import numpy as np
import pytest

from impsamp import (
    DegenerateWeightsError,
    GaussianDensity,
    RngStream,
    WeightedEnsemble,
    ess,
    gaussian_importance_rhat,
    gaussian_scaling_study,
    importance_estimate,
)
from impsamp.importance import scaling_log_ratio, write_scaling_csv


def closed_form_rhat(sigma2: float, m: int) -> float:
    return (sigma2 / np.sqrt(2 * sigma2 - 1)) ** m


class TestWeightedEnsemble:
    def test_normalized_weights_sum_to_one(self):
        rng = np.random.default_rng(0)
        e = WeightedEnsemble(rng.standard_normal((100, 2)), rng.standard_normal(100))
        assert abs(e.normalized_weights.sum() - 1.0) < 1e-12
        assert np.all(e.normalized_weights >= 0)

    def test_all_zero_weights_raise(self):
        with pytest.raises(DegenerateWeightsError):
            WeightedEnsemble(np.zeros((3, 1)), np.full(3, -np.inf))

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            WeightedEnsemble(np.zeros((0, 1)), np.zeros(0))


class TestImportanceEstimate:
    def test_constant_integrand_is_one(self):
        rng = np.random.default_rng(1)
        e = WeightedEnsemble(rng.standard_normal((50, 1)), rng.standard_normal(50))
        assert importance_estimate(lambda x: np.ones(x.shape[0]), e) == pytest.approx(1.0)

    def test_second_moment_direct_sampling(self):
        d = GaussianDensity([0.0], [[1.0]])
        x = d.sample(RngStream(2), size=1_000_000)
        e = WeightedEnsemble(x, np.zeros(len(x)))
        est = importance_estimate(lambda s: s[:, 0] ** 2, e)
        assert est == pytest.approx(1.0, abs=0.01)

    def test_second_moment_through_wide_importance_function(self):
        proposal = GaussianDensity([0.0], [[4.0]])
        target = GaussianDensity([0.0], [[1.0]])
        x = proposal.sample(RngStream(3), size=1_000_000)
        log_w = target.log_density(x) - proposal.log_density(x)
        e = WeightedEnsemble(x, log_w)
        est = importance_estimate(lambda s: s[:, 0] ** 2, e)
        assert est == pytest.approx(1.0, abs=0.02)

    def test_self_sampling_reproduces_plain_mean_exactly(self):
        rng = np.random.default_rng(4)
        samples = rng.standard_normal((1000, 1))
        e = WeightedEnsemble(samples, np.zeros(1000))
        np.testing.assert_allclose(e.normalized_weights, np.full(1000, 1.0 / 1000), rtol=1e-14)
        est = importance_estimate(lambda s: s[:, 0], e)
        assert est == pytest.approx(samples.mean(), rel=1e-12)


class TestEss:
    def test_uniform_weights(self):
        e = WeightedEnsemble(np.zeros((64, 1)), np.zeros(64))
        report = ess(e)
        assert report.R_hat == pytest.approx(1.0, rel=1e-12)
        assert report.M_eff == pytest.approx(64.0, rel=1e-12)

    def test_collapse_to_one_sample(self):
        log_w = np.full(50, -1e6)
        log_w[17] = 0.0
        report = ess(WeightedEnsemble(np.zeros((50, 1)), log_w))
        assert report.R_hat == pytest.approx(50.0)
        assert report.M_eff == pytest.approx(1.0)

    def test_shift_invariance(self):
        """ESS is invariant to the unknown normalization constant."""
        rng = np.random.default_rng(5)
        log_w = rng.standard_normal(200)
        base = ess(WeightedEnsemble(np.zeros((200, 1)), log_w))
        for shift in (-300.0, -1.0, 0.0, 7.5, 123.0):
            shifted = ess(WeightedEnsemble(np.zeros((200, 1)), log_w + shift))
            assert shifted.R_hat == pytest.approx(base.R_hat, rel=1e-9)

    def test_closed_form_ten_dims(self):
        r = gaussian_importance_rhat(10, 2.0, 1_000_000, RngStream(6))
        expected = closed_form_rhat(2.0, 10)
        assert expected == pytest.approx(4.21, abs=0.005)
        assert r == pytest.approx(expected, rel=0.10)

    def test_empirical_matches_closed_form_within_3se(self):
        """Replicated R-hat estimates straddle the closed form."""
        sigma2 = 2.0
        for m in (1, 5, 15):
            reps = np.array(
                [
                    gaussian_importance_rhat(m, sigma2, 200_000, RngStream(7, k))
                    for k in range(8)
                ]
            )
            se = reps.std(ddof=1) / np.sqrt(len(reps))
            assert abs(reps.mean() - closed_form_rhat(sigma2, m)) < 3 * se + 1e-3


class TestScalingStudy:
    def test_identity_importance_function(self):
        rows = gaussian_scaling_study([1, 5, 30], 1.0, 250.0)
        for _, required in rows:
            assert required == pytest.approx(250.0, rel=1e-12)

    def test_zero_dimensions(self):
        rows = gaussian_scaling_study([0], 2.0, 123.0)
        assert rows[0][1] == pytest.approx(123.0, rel=1e-12)

    def test_twenty_dims_variance_two(self):
        rows = gaussian_scaling_study([20], 2.0, 100.0)
        expected = 100.0 * (2.0 / np.sqrt(3.0)) ** 20
        assert rows[0][1] == pytest.approx(expected, rel=1e-12)
        assert rows[0][1] == pytest.approx(1.78e3, rel=0.01)

    def test_invalid_variance_raises(self):
        with pytest.raises(ValueError):
            gaussian_scaling_study([1], 0.5, 100.0)
        with pytest.raises(ValueError):
            scaling_log_ratio(0.3)

    def test_growth_is_exponential(self):
        rows = gaussian_scaling_study(list(range(1, 16)), 2.0, 100.0)
        required = np.array([r for _, r in rows])
        ratios = required[1:] / required[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
        assert ratios[0] > 1.0

    def test_csv_output(self, tmp_path):
        path = tmp_path / "scaling.csv"
        write_scaling_csv(path, gaussian_scaling_study([1, 2], 2.0, 10.0))
        lines = path.read_text().splitlines()
        assert lines[0] == "m,required_M"
        assert len(lines) == 3
