"""Sequential data assimilation on state-space models.

One weight-recursion engine drives three particle filters with different
proposal distributions:

* SIR: propose from the model transition, weight by the observation
  likelihood.  Blind to the incoming data point.
* optimal: propose from p(x^{n+1} | x^n, b^{n+1}) (closed form for linear
  observations of a Gaussian transition), weight by the predictive
  likelihood of the data.  Minimum weight variance among one-step
  proposals.
* implicit: per particle, minimize the negative log of
  p(x^{n+1}|x^n) p(b^{n+1}|x^{n+1}) and draw one implicit sample.
  Coincides with the optimal filter when everything is linear-Gaussian,
  and stays implementable when the observation map is not.

A Kalman filter provides the exact linear-Gaussian reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import _kernels
from .exceptions import CholeskyError, DegenerateWeightsError, NumericalError
from .gaussian import GaussianDensity
from .importance import WeightedEnsemble, ess
from .implicit import implicit_map
from .linalg import symmetrize
from .optimize import ObjectiveF, minimize
from .rng import RngStream


@dataclass
class LinearSSM:
    """x^{n+1} = A x^n + w^n,  b^{n+1} = H x^{n+1} + eta^n."""

    A: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0: GaussianDensity
    noise_w: GaussianDensity = field(init=False, repr=False)
    noise_eta: GaussianDensity = field(init=False, repr=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        self.H = np.atleast_2d(np.asarray(self.H, dtype=np.float64))
        self.Q = symmetrize(np.atleast_2d(np.asarray(self.Q, dtype=np.float64)))
        self.R = symmetrize(np.atleast_2d(np.asarray(self.R, dtype=np.float64)))
        m = self.A.shape[0]
        k = self.H.shape[0]
        if self.A.shape != (m, m) or self.H.shape[1] != m:
            raise ValueError("inconsistent dynamics/observation dimensions")
        if self.Q.shape != (m, m) or self.R.shape != (k, k):
            raise ValueError("inconsistent noise covariance dimensions")
        if self.x0.dim != m:
            raise ValueError("initial density dimension mismatch")
        self.noise_w = GaussianDensity(np.zeros(m), self.Q)
        self.noise_eta = GaussianDensity(np.zeros(k), self.R)
        if self.noise_eta.rank < k:
            raise ValueError("observation noise covariance R must be positive definite")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.H.shape[0]


@dataclass
class NonlinearSSM:
    """x^{n+1} = f(x^n) + w^n,  b^{n+1} = h(x^{n+1}) + eta^n.

    With vectorized=True, f and h also accept (M, m) sample blocks row-wise.
    f_jac / h_jac (single-point Jacobians) enable analytic gradients in the
    implicit filter.
    """

    f: Callable
    h: Callable
    Q: np.ndarray
    R: np.ndarray
    x0: GaussianDensity
    f_jac: Callable | None = None
    h_jac: Callable | None = None
    vectorized: bool = False
    noise_w: GaussianDensity = field(init=False, repr=False)
    noise_eta: GaussianDensity = field(init=False, repr=False)

    def __post_init__(self):
        self.Q = symmetrize(np.atleast_2d(np.asarray(self.Q, dtype=np.float64)))
        self.R = symmetrize(np.atleast_2d(np.asarray(self.R, dtype=np.float64)))
        self.noise_w = GaussianDensity(np.zeros(self.Q.shape[0]), self.Q)
        self.noise_eta = GaussianDensity(np.zeros(self.R.shape[0]), self.R)
        if self.noise_eta.rank < self.R.shape[0]:
            raise ValueError("observation noise covariance R must be positive definite")

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.R.shape[0]


def as_nonlinear(ssm: LinearSSM) -> NonlinearSSM:
    """View a linear model through the nonlinear interface."""
    A, H = ssm.A, ssm.H
    return NonlinearSSM(
        f=lambda x: x @ A.T,
        h=lambda x: x @ H.T,
        Q=ssm.Q,
        R=ssm.R,
        x0=ssm.x0,
        f_jac=lambda x: A,
        h_jac=lambda x: H,
        vectorized=True,
    )


def _apply_batch(fn, X: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(fn(X), dtype=np.float64)
    return np.asarray([fn(x) for x in X], dtype=np.float64)


@dataclass
class KalmanState:
    mean: np.ndarray
    cov: np.ndarray


@dataclass
class FilterState:
    """Particle filter state after n assimilation steps."""

    step: int
    ensemble: WeightedEnsemble
    ess_history: list = field(default_factory=list)
    log_weight_history: list = field(default_factory=list)
    resampled_history: list = field(default_factory=list)
    resample_count: int = 0

    @classmethod
    def initial(cls, ssm, M: int, rng: RngStream) -> "FilterState":
        samples = ssm.x0.sample(rng, size=M)
        return cls(step=0, ensemble=WeightedEnsemble(samples, np.zeros(M)))


def kalman_step(ssm: LinearSSM, state: KalmanState, b: np.ndarray) -> KalmanState:
    """Predict-update cycle: X = A P A' + Q, K = X H'(H X H' + R)^-1."""
    A, H = ssm.A, ssm.H
    mean_pred = A @ state.mean
    X = symmetrize(A @ state.cov @ A.T + ssm.Q)
    S = symmetrize(H @ X @ H.T + ssm.R)
    try:
        cS = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise CholeskyError("singular innovation covariance in Kalman step") from exc
    K = cho_solve((cS, True), H @ X).T
    mean = mean_pred + K @ (np.asarray(b, dtype=np.float64) - H @ mean_pred)
    cov = symmetrize((np.eye(ssm.dim) - K @ H) @ X)
    return KalmanState(mean=mean, cov=cov)


def kalman_filter(ssm: LinearSSM, data: np.ndarray):
    """Run the Kalman recursion over all data rows; returns (means, covs)."""
    state = KalmanState(mean=ssm.x0.mean.copy(), cov=ssm.x0.cov.copy())
    means = np.empty((len(data), ssm.dim))
    covs = np.empty((len(data), ssm.dim, ssm.dim))
    for n, b in enumerate(data):
        state = kalman_step(ssm, state, b)
        means[n] = state.mean
        covs[n] = state.cov
    return means, covs


def systematic_resample(ensemble: WeightedEnsemble, rng: RngStream) -> WeightedEnsemble:
    """M offspring from one uniform stratified sweep; output weights 1/M.

    The expected offspring count of particle i is M * w_i.
    """
    u0 = rng.generator().random()
    idx = _kernels.systematic_indices(ensemble.normalized_weights, u0)
    return WeightedEnsemble(ensemble.samples[idx], np.zeros(ensemble.n_samples))


def _advance(state: FilterState, samples, log_w, step_rng, resample_threshold) -> FilterState:
    """Shared tail of every particle step: normalize, track ESS, resample."""
    try:
        ensemble = WeightedEnsemble(samples, log_w)
    except DegenerateWeightsError as exc:
        raise DegenerateWeightsError(
            f"filter collapsed numerically at step {state.step + 1}: "
            "all particles have zero likelihood"
        ) from exc
    m_eff = ess(ensemble).M_eff
    resampled = m_eff < resample_threshold * ensemble.n_samples
    recorded_log_w = log_w.copy()
    if resampled:
        ensemble = systematic_resample(ensemble, step_rng.substream(1))
    return FilterState(
        step=state.step + 1,
        ensemble=ensemble,
        ess_history=state.ess_history + [m_eff],
        log_weight_history=state.log_weight_history + [recorded_log_w],
        resampled_history=state.resampled_history + [resampled],
        resample_count=state.resample_count + int(resampled),
    )


def sir_step(
    ssm: NonlinearSSM,
    state: FilterState,
    b: np.ndarray,
    rng: RngStream,
    resample_threshold: float = 0.5,
) -> FilterState:
    """Propose from the model transition; weight by the observation likelihood."""
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    X = state.ensemble.samples
    M = X.shape[0]
    xi = rng.substream(0).generator().standard_normal((M, ssm.dim))
    X_new = _apply_batch(ssm.f, X, ssm.vectorized) + xi @ ssm.noise_w.chol.T
    resid = b - _apply_batch(ssm.h, X_new, ssm.vectorized)
    incr = ssm.noise_eta.log_density(resid)
    return _advance(state, X_new, state.ensemble.log_weights + incr, rng, resample_threshold)


def optimal_step(
    ssm: LinearSSM,
    state: FilterState,
    b: np.ndarray,
    rng: RngStream,
    resample_threshold: float = 0.5,
) -> FilterState:
    """Propose from the exact conditional p(x^{n+1} | x^n, b^{n+1}).

    Per particle the proposal is N(Sigma (Q^-1 A x + H'R^-1 b), Sigma) with
    Sigma = (Q^-1 + H'R^-1 H)^-1, and the weight increment is the predictive
    likelihood N(b; H A x, H Q H' + R), independent of the new sample.
    """
    if not isinstance(ssm, LinearSSM):
        raise TypeError("optimal_step needs the closed-form linear-Gaussian conditional")
    if ssm.noise_w.rank < ssm.dim:
        raise CholeskyError(
            "singular model noise Q: the optimal proposal needs Q^-1 "
            "(use the implicit filter instead of silently pseudo-inverting)"
        )
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    X = state.ensemble.samples
    M = X.shape[0]
    m = ssm.dim
    cQ = ssm.noise_w.chol
    cR = ssm.noise_eta.chol
    Qinv = cho_solve((cQ, True), np.eye(m))
    HtRinv = cho_solve((cR, True), ssm.H).T
    Sigma_inv = symmetrize(Qinv + HtRinv @ ssm.H)
    cSi = np.linalg.cholesky(Sigma_inv)
    Sigma = symmetrize(cho_solve((cSi, True), np.eye(m)))
    cSigma = np.linalg.cholesky(Sigma)

    X_pred = X @ ssm.A.T
    means = (X_pred @ Qinv + HtRinv @ b) @ Sigma
    xi = rng.substream(0).generator().standard_normal((M, m))
    X_new = means + xi @ cSigma.T

    pred_dens = GaussianDensity(np.zeros(ssm.obs_dim), symmetrize(ssm.H @ ssm.Q @ ssm.H.T + ssm.R))
    incr = pred_dens.log_density(b - X_pred @ ssm.H.T)
    return _advance(state, X_new, state.ensemble.log_weights + incr, rng, resample_threshold)


def implicit_filter_step(
    ssm: NonlinearSSM | LinearSSM,
    state: FilterState,
    b: np.ndarray,
    rng: RngStream,
    resample_threshold: float = 0.5,
) -> FilterState:
    """Per particle: minimize the one-step negative log posterior and draw
    one implicit sample; the weight increment is exp(-phi_j) J_j."""
    if isinstance(ssm, LinearSSM):
        ssm = as_nonlinear(ssm)
    if ssm.noise_w.rank < ssm.dim:
        raise CholeskyError("singular model noise Q in implicit filter step")
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    X = state.ensemble.samples
    M = X.shape[0]
    m = ssm.dim
    # one pair of solves per step; the per-particle objectives then run on
    # plain matvecs, which dominates the per-particle cost
    Qinv = cho_solve((ssm.noise_w.chol, True), np.eye(m))
    Rinv = cho_solve((ssm.noise_eta.chol, True), np.eye(ssm.obs_dim))
    h, h_jac = ssm.h, ssm.h_jac
    xi = rng.substream(0).generator().standard_normal((M, m))
    X_new = np.empty_like(X)
    incr = np.empty(M)
    for j in range(M):
        fx = np.asarray(ssm.f(X[j]), dtype=np.float64)

        def fun(x, fx=fx):
            dx = x - fx
            r = b - h(x)
            return 0.5 * float(dx @ Qinv @ dx) + 0.5 * float(r @ Rinv @ r)

        if h_jac is not None:

            def grad(x, fx=fx):
                return Qinv @ (x - fx) - np.atleast_2d(h_jac(x)).T @ (Rinv @ (b - h(x)))

        else:
            grad = None
        F_j = ObjectiveF(fun=fun, grad=grad, dim=m)
        try:
            res = minimize(F_j, fx)
            x1, log_jac = implicit_map(F_j, res, xi[j])
        except NumericalError as exc:
            raise type(exc)(f"particle {j} at step {state.step + 1}: {exc}") from exc
        X_new[j] = x1
        incr[j] = -res.phi + log_jac
    return _advance(state, X_new, state.ensemble.log_weights + incr, rng, resample_threshold)


@dataclass
class FilterRunResult:
    estimates: np.ndarray
    ess: np.ndarray
    resampled: np.ndarray
    state: FilterState | None = None
    kalman_covs: np.ndarray | None = None


_STEP_FNS = {"sir": sir_step, "optimal": optimal_step, "implicit": implicit_filter_step}


def run_filter(
    method: str,
    ssm,
    data: np.ndarray,
    M: int,
    rng: RngStream,
    resample_threshold: float = 0.5,
) -> FilterRunResult:
    """Assimilate all data rows; per-step streams derive from rng.

    method is one of kalman | sir | optimal | implicit.  The estimate row n
    is the posterior mean of the state after seeing data rows 0..n.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if method == "kalman":
        if not isinstance(ssm, LinearSSM):
            raise TypeError("the Kalman filter needs a LinearSSM")
        means, covs = kalman_filter(ssm, data)
        n = len(data)
        return FilterRunResult(
            estimates=means,
            ess=np.zeros(n),
            resampled=np.zeros(n, dtype=bool),
            kalman_covs=covs,
        )
    if method not in _STEP_FNS:
        raise ValueError(f"unknown filter {method!r}")
    step_fn = _STEP_FNS[method]
    if method in ("sir", "implicit") and isinstance(ssm, LinearSSM):
        ssm_step = as_nonlinear(ssm)
    else:
        ssm_step = ssm
    state = FilterState.initial(ssm, M, rng.substream(0))
    estimates = np.empty((len(data), ssm.dim))
    for n, b in enumerate(data):
        state = step_fn(ssm_step, state, b, rng.substream(n + 1), resample_threshold)
        estimates[n] = state.ensemble.mean()
    return FilterRunResult(
        estimates=estimates,
        ess=np.asarray(state.ess_history),
        resampled=np.asarray(state.resampled_history),
        state=state,
    )


def simulate_truth(ssm, n_steps: int, rng: RngStream):
    """Twin-experiment truth and data, fixed per rng so filters compare on
    identical realizations.  Returns (truth[(n+1), m], data[n, k])."""
    gen = rng.generator()
    if isinstance(ssm, LinearSSM):
        f = lambda x: ssm.A @ x
        h = lambda x: ssm.H @ x
    else:
        f, h = ssm.f, ssm.h
    m, k = ssm.dim, ssm.obs_dim
    truth = np.empty((n_steps + 1, m))
    data = np.empty((n_steps, k))
    truth[0] = ssm.x0.mean + gen.standard_normal(m) @ ssm.x0.chol.T
    for n in range(n_steps):
        truth[n + 1] = np.asarray(f(truth[n])) + gen.standard_normal(m) @ ssm.noise_w.chol.T
        data[n] = np.asarray(h(truth[n + 1])) + gen.standard_normal(k) @ ssm.noise_eta.chol.T
    return truth, data


def write_filter_log(path, estimates, truth, m_eff, resampled):
    """Run log CSV: step,estimate_1..m,truth_1..m,m_eff,resampled."""
    from ._csv import write_csv

    estimates = np.atleast_2d(estimates)
    truth = np.atleast_2d(truth)
    m = estimates.shape[1]
    header = (
        ["step"]
        + [f"estimate_{i + 1}" for i in range(m)]
        + [f"truth_{i + 1}" for i in range(m)]
        + ["m_eff", "resampled"]
    )
    rows = []
    for n in range(estimates.shape[0]):
        rows.append(
            [n + 1, *estimates[n], *truth[n], float(m_eff[n]), bool(resampled[n])]
        )
    return write_csv(path, header, rows)
