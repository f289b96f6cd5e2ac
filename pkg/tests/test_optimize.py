"""Quasi-Newton minimization of negative log-densities."""

import numpy as np
import pytest

from impsamp import MinimizeError, ObjectiveF, fd_gradient, minimize
from impsamp.linalg import cholesky_psd, symmetrize


def quadratic_objective(a, sigma, c=0.0):
    """F(x) = 0.5 (x-a)' Sigma^-1 (x-a) + c with analytic gradient."""
    prec = np.linalg.inv(sigma)
    a = np.asarray(a, dtype=np.float64)
    return ObjectiveF(
        fun=lambda x: 0.5 * float((x - a) @ prec @ (x - a)) + c,
        grad=lambda x: prec @ (x - a),
        dim=a.size,
    )


class TestMinimize:
    def test_standard_gaussian(self):
        F = ObjectiveF(fun=lambda x: 0.5 * float(x @ x), grad=lambda x: x, dim=3)
        res = minimize(F, np.array([4.0, -2.0, 1.0]))
        np.testing.assert_allclose(res.minimizer, np.zeros(3), atol=1e-12)
        assert res.phi == pytest.approx(0.0, abs=1e-20)
        np.testing.assert_allclose(res.L, np.eye(3), atol=1e-9)

    def test_shifted_gaussian_recovers_offset_and_chol(self):
        a = np.array([1.0, -0.5])
        sigma = np.array([[2.0, 0.6], [0.6, 1.0]])
        c = 3.25
        F = quadratic_objective(a, sigma, c)
        res = minimize(F, np.array([-3.0, 3.0]))
        np.testing.assert_allclose(res.minimizer, a, atol=1e-10)
        assert res.phi == pytest.approx(c, rel=1e-12)
        np.testing.assert_allclose(res.L, np.linalg.cholesky(sigma), atol=1e-7)

    def test_rosenbrock(self):
        def fun(x):
            return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

        def grad(x):
            return np.array(
                [
                    -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
                    200 * (x[1] - x[0] ** 2),
                ]
            )

        res = minimize(ObjectiveF(fun=fun, grad=grad, dim=2), np.array([-1.0, 1.0]))
        np.testing.assert_allclose(res.minimizer, [1.0, 1.0], atol=1e-6)

    def test_fd_gradient_only(self):
        """No gradient supplied: finite differences drive the search."""
        sigma = np.array([[1.5, 0.2], [0.2, 0.8]])
        F = quadratic_objective([0.3, 0.7], sigma)
        F = ObjectiveF(fun=F.fun, grad=None, dim=2)
        res = minimize(F, np.zeros(2))
        np.testing.assert_allclose(res.minimizer, [0.3, 0.7], atol=1e-7)
        np.testing.assert_allclose(res.L @ res.L.T, sigma, rtol=1e-3)

    def test_gradient_tolerance_invariant(self):
        F = quadratic_objective([2.0], np.array([[4.0]]), c=10.0)
        res = minimize(F, np.array([40.0]))
        g = F.gradient(res.minimizer)
        assert np.max(np.abs(g)) < 1e-8 * (1.0 + abs(res.phi))

    def test_saddle_point_raises_not_u_shaped(self):
        # starting at the saddle of a double well: gradient vanishes but the
        # Hessian is indefinite, so no valid L exists
        F = ObjectiveF(
            fun=lambda x: float((x[0] ** 2 - 1) ** 2 + x[1] ** 2),
            grad=lambda x: np.array([4 * x[0] * (x[0] ** 2 - 1), 2 * x[1]]),
            dim=2,
        )
        with pytest.raises(MinimizeError):
            minimize(F, np.array([0.0, 0.0]))

    def test_max_iter_exhaustion_raises(self):
        F = ObjectiveF(fun=lambda x: float(x[0]), grad=lambda x: np.array([1.0]), dim=1)
        with pytest.raises(MinimizeError):
            minimize(F, np.array([0.0]), max_iter=10)

    def test_non_finite_start_raises(self):
        F = ObjectiveF(fun=lambda x: float(np.log(x[0])), dim=1)
        with pytest.raises(ValueError):
            minimize(F, np.array([-1.0]))


class TestFiniteDifferences:
    def test_fd_matches_analytic_gradient_on_random_probes(self):
        """Central differences at step 1e-6 (1 + |x|) track a supplied gradient."""
        rng = np.random.default_rng(12)
        A = rng.standard_normal((4, 4))
        sigma = symmetrize(A @ A.T + 2 * np.eye(4))
        F = quadratic_objective(rng.standard_normal(4), sigma)
        for _ in range(10):
            x = 3 * rng.standard_normal(4)
            g_fd = fd_gradient(F.fun, x)
            g = F.grad(x)
            scale = np.maximum(np.abs(g), 1e-3)
            assert np.max(np.abs(g_fd - g) / scale) < 1e-4

    def test_hessian_psd_check_uses_semidefinite_factorization(self):
        L, rank = cholesky_psd(np.diag([1.0, 0.0]))
        assert rank == 1
