"""Built-in demonstration problems shared by the CLI and the test suite."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve

from .feasibility import ModelProblem
from .filters import LinearSSM, NonlinearSSM
from .gaussian import GaussianDensity
from .implicit import PosteriorProblem
from .rng import RngStream


def model_problem_ssm(m: int, q: float, r: float) -> LinearSSM:
    """H = A = I_m, Q = qI, R = rI with a stationary initial density."""
    return ModelProblem(m=m, q=q, r=r).to_ssm()


def scalar_cubic_ssm(q: float = 1.0, r: float = 0.01) -> NonlinearSSM:
    """Stable scalar dynamics observed through h(x) = x + 0.1 x^3.

    Accurate data (small r) through a nonlinear observation: the regime
    where a blind proposal wastes its particles and data-informed
    proposals pay off.
    """

    def f(x):
        return 0.9 * np.asarray(x, dtype=np.float64)

    def h(x):
        x = np.asarray(x, dtype=np.float64)
        return x + 0.1 * x**3

    return NonlinearSSM(
        f=f,
        h=h,
        Q=np.array([[q]]),
        R=np.array([[r]]),
        x0=GaussianDensity([0.0], [[1.0]]),
        f_jac=lambda x: np.array([[0.9]]),
        h_jac=lambda x: np.array([[1.0 + 0.3 * float(np.asarray(x).ravel()[0]) ** 2]]),
        vectorized=True,
    )


def exp_decay_problem(
    rng: RngStream,
    theta_true=(1.0, 0.5),
    noise_sigma: float = 0.05,
    n_obs: int = 10,
):
    """Two-parameter exponential decay theta_1 * exp(-theta_2 t_i).

    Synthetic data are generated from theta_true with i.i.d. Gaussian
    observation noise.  Returns (problem, theta_true).
    """
    t = 0.5 * np.arange(1, n_obs + 1)
    theta_true = np.asarray(theta_true, dtype=np.float64)

    def forward(theta):
        return theta[0] * np.exp(-theta[1] * t)

    def forward_jac(theta):
        decay = np.exp(-theta[1] * t)
        return np.column_stack([decay, -theta[0] * t * decay])

    noise = GaussianDensity(np.zeros(n_obs), noise_sigma**2 * np.eye(n_obs))
    data = forward(theta_true) + noise_sigma * rng.generator().standard_normal(n_obs)
    prior = GaussianDensity(np.array([1.5, 1.0]), np.diag([0.5**2, 0.5**2]))
    problem = PosteriorProblem(
        prior=prior, forward=forward, noise=noise, data=data, forward_jac=forward_jac
    )
    return problem, theta_true


def linear_gaussian_problem(rng: RngStream, noise_sigma: float = 0.3):
    """Linear forward map with a correlated Gaussian prior.

    Returns (problem, exact_posterior) where the conjugate posterior is
    computed in closed form for oracle comparisons.
    """
    G = np.array([[1.0, 0.5], [-0.4, 1.0], [0.7, 0.7]])
    prior = GaussianDensity(np.array([0.5, -0.3]), np.array([[0.8, 0.3], [0.3, 0.5]]))
    noise = GaussianDensity(np.zeros(3), noise_sigma**2 * np.eye(3))
    theta_star = np.array([1.0, 0.4])
    data = G @ theta_star + noise_sigma * rng.generator().standard_normal(3)

    prior_prec = cho_solve((prior.chol, True), np.eye(2))
    obs_prec = G.T @ cho_solve((noise.chol, True), G)
    post_cov = np.linalg.inv(prior_prec + obs_prec)
    post_mean = post_cov @ (
        prior_prec @ prior.mean + G.T @ cho_solve((noise.chol, True), data)
    )
    posterior = GaussianDensity(post_mean, 0.5 * (post_cov + post_cov.T))
    problem = PosteriorProblem(
        prior=prior, forward=lambda th: G @ th, noise=noise, data=data,
        forward_jac=lambda th: G,
    )
    return problem, posterior
