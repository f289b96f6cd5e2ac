"""Implicit sampling, particle filtering, assimilation feasibility, and
model-error estimation on the two-scale Lorenz-96 system."""

from ._kernels import use_numba
from .exceptions import (
    CholeskyError,
    DegenerateWeightsError,
    IntegrationError,
    JacobiConvergenceError,
    MinimizeError,
    NumericalError,
    RiccatiConvergenceError,
    RootFindError,
)
from .feasibility import (
    ConePoint,
    FeasibilityReport,
    GPFamily,
    ModelProblem,
    analyze_feasibility,
    collapse_matrices,
    cone_diagram,
    effective_dimension,
    gp_covariance_matrix,
    gp_operator_norms,
)
from .filters import (
    FilterRunResult,
    FilterState,
    KalmanState,
    LinearSSM,
    NonlinearSSM,
    as_nonlinear,
    implicit_filter_step,
    kalman_filter,
    kalman_step,
    optimal_step,
    run_filter,
    simulate_truth,
    sir_step,
    systematic_resample,
)
from .gaussian import GaussianDensity, log_density, sample_gaussian
from .implicit import (
    PosteriorProblem,
    build_objective,
    implicit_ensemble,
    implicit_map,
    implicit_sample,
    sample_posterior,
)
from .importance import (
    EssReport,
    WeightedEnsemble,
    ess,
    gaussian_importance_rhat,
    gaussian_scaling_study,
    importance_estimate,
)
from .linalg import (
    Spectrum,
    cholesky_psd,
    frobenius_norm,
    jacobi_eigen,
    riccati_steady_state,
    symmetrize,
)
from .lorenz96 import (
    DiscrepancySeries,
    Lorenz96TwoScale,
    characterize,
    extract_discrepancy,
    integrate_full,
    integrate_reduced,
    reduced_rhs,
    reduced_step,
    simulate_resolved,
)
from .optimize import MinResult, ObjectiveF, fd_gradient, fd_hessian, minimize
from .rng import RngStream
from .timeseries import ArFit, autocorrelation, autocovariance, fit_ar
from .transport import ode_transport_map_1d, ode_transport_map_batch

__version__ = "0.1.0"

__all__ = [
    "ArFit",
    "CholeskyError",
    "ConePoint",
    "DegenerateWeightsError",
    "EssReport",
    "FeasibilityReport",
    "FilterRunResult",
    "FilterState",
    "GPFamily",
    "GaussianDensity",
    "IntegrationError",
    "JacobiConvergenceError",
    "KalmanState",
    "LinearSSM",
    "Lorenz96TwoScale",
    "DiscrepancySeries",
    "MinResult",
    "MinimizeError",
    "ModelProblem",
    "NonlinearSSM",
    "NumericalError",
    "ObjectiveF",
    "PosteriorProblem",
    "RiccatiConvergenceError",
    "RngStream",
    "RootFindError",
    "Spectrum",
    "WeightedEnsemble",
    "analyze_feasibility",
    "as_nonlinear",
    "autocorrelation",
    "autocovariance",
    "build_objective",
    "characterize",
    "cholesky_psd",
    "collapse_matrices",
    "cone_diagram",
    "effective_dimension",
    "ess",
    "extract_discrepancy",
    "fd_gradient",
    "fd_hessian",
    "fit_ar",
    "frobenius_norm",
    "gaussian_importance_rhat",
    "gaussian_scaling_study",
    "gp_covariance_matrix",
    "gp_operator_norms",
    "implicit_ensemble",
    "implicit_filter_step",
    "implicit_map",
    "implicit_sample",
    "importance_estimate",
    "integrate_full",
    "integrate_reduced",
    "jacobi_eigen",
    "kalman_filter",
    "kalman_step",
    "log_density",
    "minimize",
    "ode_transport_map_1d",
    "ode_transport_map_batch",
    "optimal_step",
    "reduced_rhs",
    "reduced_step",
    "riccati_steady_state",
    "run_filter",
    "sample_gaussian",
    "sample_posterior",
    "simulate_resolved",
    "simulate_truth",
    "sir_step",
    "symmetrize",
    "systematic_resample",
    "use_numba",
]
