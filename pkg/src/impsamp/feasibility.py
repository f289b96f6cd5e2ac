"""When is assimilation worth attempting, and which filters survive it.

The size of a posterior covariance is measured by its Frobenius norm; a
separate effective dimension counts how many spectral directions carry
the noise.  A family of stationary Gaussian-process covariances with unit
energy separates the two notions: shrinking the correlation length grows
the effective dimension while the norm barely moves.

For linear-Gaussian problems, the steady-state Riccati covariance P gives
the feasibility norm, and two derived matrices govern weight-variance
growth (hence collapse) of the SIR and optimal/implicit filters:

    Sigma_SIR = H (Q + A P A') H' R^-1
    Sigma_Opt = H A P A' H' (H Q H' + R)^-1

On the model problem H = A = I, Q = qI, R = rI everything reduces to
scalar functions of (q, r), carving the feasibility plane into nested
cones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.linalg import cho_solve

from .exceptions import NumericalError
from .filters import LinearSSM
from .gaussian import GaussianDensity
from .linalg import Spectrum, frobenius_norm, jacobi_eigen, riccati_steady_state, symmetrize


# ---------------------------------------------------------------------------
# stationary Gaussian-process covariance family
# ---------------------------------------------------------------------------


@dataclass
class GPFamily:
    """Squared-exponential kernel on [0, 1] normalized to unit energy.

    k(x, x') = pi^(-1/4) L^(-1/2) exp(-(x - x')^2 / (2 L^2)); the energy
    integral of k^2 over the line equals 1 for every correlation length L,
    so members differ only in how the noise is distributed, not how much
    there is.
    """

    L: float
    m: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("correlation length must be positive")
        if self.m < 2:
            raise ValueError("need at least two grid points")

    @property
    def h(self) -> float:
        return 1.0 / self.m

    def kernel(self, x, xp):
        x = np.asarray(x, dtype=np.float64)
        xp = np.asarray(xp, dtype=np.float64)
        return (
            np.pi ** (-0.25)
            * self.L ** (-0.5)
            * np.exp(-((x - xp) ** 2) / (2.0 * self.L**2))
        )

    def energy(self, y: float = 0.0) -> float:
        """Quadrature check of the unit-energy normalization at point y."""
        val, _ = quad(lambda yp: self.kernel(y, yp) ** 2, -np.inf, np.inf)
        return float(val)


def gp_covariance_matrix(fam: GPFamily) -> np.ndarray:
    """p_ij = k(i h, j h) on the grid h, 2h, ..., 1."""
    grid = fam.h * np.arange(1, fam.m + 1)
    return symmetrize(fam.kernel(grid[:, None], grid[None, :]))


@dataclass
class GPNorms:
    frob_operator: float
    frob_discrete: float
    eff_dim: int


def effective_dimension(spectrum, eps: float) -> int:
    """Smallest l with sum_{j<=l} lambda_j^2 >= (1 - eps) * total.

    The spectrum is finite here, so the defining infinite sum truncates at
    the matrix dimension.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be inside (0, 1)")
    eigs = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    sq = eigs**2
    total = float(np.sum(sq))
    if total == 0.0:
        raise ValueError("all-zero spectrum has no effective dimension")
    partial = np.cumsum(sq)
    return int(np.searchsorted(partial, (1.0 - eps) * total) + 1)


def gp_operator_norms(fam: GPFamily, eps: float = 0.05, quad_tol: float = 1e-10) -> GPNorms:
    """Operator vs discrete Frobenius norm, plus the effective dimension.

    The operator norm comes from adaptive 2-D quadrature of k^2 over the
    unit square; the discrete norm rescales the matrix eigenvalues by the
    mesh size (lambda_tilde ~ h lambda).
    """
    val, err = dblquad(
        lambda xp, x: fam.kernel(x, xp) ** 2, 0.0, 1.0, 0.0, 1.0,
        epsabs=quad_tol, epsrel=quad_tol,
    )
    if err > 100 * max(quad_tol, quad_tol * abs(val)):
        raise NumericalError(f"operator-norm quadrature did not converge (err {err:.3e})")
    spec = jacobi_eigen(gp_covariance_matrix(fam))
    scaled = fam.h * spec.eigenvalues
    return GPNorms(
        frob_operator=float(np.sqrt(val)),
        frob_discrete=float(np.sqrt(np.sum(scaled**2))),
        eff_dim=effective_dimension(spec, eps),
    )


# ---------------------------------------------------------------------------
# collapse criteria for linear-Gaussian assimilation
# ---------------------------------------------------------------------------


def collapse_matrices(ssm: LinearSSM, P: np.ndarray):
    """(Sigma_SIR, Sigma_Opt) for the steady-state posterior covariance P."""
    A, H, Q, R = ssm.A, ssm.H, ssm.Q, ssm.R
    P = np.asarray(P, dtype=np.float64)
    apat = A @ P @ A.T
    cR = ssm.noise_eta.chol
    # right-multiplication by R^-1 via Cholesky solves of the transpose
    sir = cho_solve((cR, True), (H @ (Q + apat) @ H.T).T).T
    S = symmetrize(H @ Q @ H.T + R)
    try:
        cS = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular H Q H' + R in collapse criterion") from exc
    opt = cho_solve((cS, True), (H @ apat @ H.T).T).T
    return sir, opt


@dataclass
class FeasibilityReport:
    """Norm-based verdicts for one linear-Gaussian assimilation problem."""

    p_frobenius: float
    eff_dim: int
    epsilon: float
    sigma_sir_norm: float
    sigma_opt_norm: float
    threshold: float
    feasible_in_principle: bool
    sir_ok: bool
    opt_ok: bool


def analyze_feasibility(
    ssm: LinearSSM, eps: float = 0.05, threshold: float = 1.0
) -> FeasibilityReport:
    """Steady-state covariance, its spectrum, and the collapse norms.

    The threshold defaults to 1 as a stand-in for a problem-specific
    sharper estimate.
    """
    P = riccati_steady_state(ssm.A, ssm.H, ssm.Q, ssm.R)
    sir, opt = collapse_matrices(ssm, P)
    p_frob = frobenius_norm(P)
    sir_norm = frobenius_norm(sir)
    opt_norm = frobenius_norm(opt)
    return FeasibilityReport(
        p_frobenius=p_frob,
        eff_dim=effective_dimension(jacobi_eigen(P), eps),
        epsilon=eps,
        sigma_sir_norm=sir_norm,
        sigma_opt_norm=opt_norm,
        threshold=threshold,
        feasible_in_principle=p_frob <= threshold,
        sir_ok=sir_norm <= threshold,
        opt_ok=opt_norm <= threshold,
    )


# ---------------------------------------------------------------------------
# the model problem and its cone diagram
# ---------------------------------------------------------------------------


@dataclass
class ModelProblem:
    """H = A = I_m, Q = q I, R = r I; everything reduces to scalars in (q, r)."""

    m: int
    q: float
    r: float

    def __post_init__(self):
        if self.q < 0 or self.r <= 0:
            raise ValueError("need q >= 0 and r > 0")

    def to_ssm(self, x0: GaussianDensity | None = None) -> LinearSSM:
        eye = np.eye(self.m)
        if x0 is None:
            # stationary start: the filter begins at its own steady state
            x0 = GaussianDensity(np.zeros(self.m), self.p_scalar() * eye)
        return LinearSSM(A=eye, H=eye, Q=self.q * eye, R=self.r * eye, x0=x0)

    def p_scalar(self) -> float:
        """Per-component steady-state posterior variance (closed form)."""
        return float((np.sqrt(self.q**2 + 4.0 * self.q * self.r) - self.q) / 2.0)

    def feasibility_scalar(self) -> float:
        return self.p_scalar()

    def sir_scalar(self) -> float:
        return float((np.sqrt(self.q**2 + 4.0 * self.q * self.r) + self.q) / (2.0 * self.r))

    def opt_scalar(self) -> float:
        return float(
            (np.sqrt(self.q**2 + 4.0 * self.q * self.r) - self.q) / (2.0 * (self.q + self.r))
        )


REGIONS = ("infeasible", "feasible_only", "optimal_ok", "sir_ok")


def classify_region(feas: float, sir: float, opt: float, threshold: float = 1.0) -> str:
    if feas > threshold:
        return "infeasible"
    if opt > threshold:
        return "feasible_only"
    if sir > threshold:
        return "optimal_ok"
    return "sir_ok"


@dataclass
class ConePoint:
    q: float
    r: float
    feas_scalar: float
    sir_scalar: float
    opt_scalar: float
    region: str


def cone_diagram(q_grid, r_grid, threshold: float = 1.0) -> list[ConePoint]:
    """Per-component feasibility scalars and region labels on a (q, r) grid.

    Labels nest by construction: sir_ok implies optimal_ok implies
    feasible (the optimal scalar never exceeds the SIR scalar).
    """
    points = []
    for q in q_grid:
        for r in r_grid:
            if q < 0 or r <= 0:
                raise ValueError("grids must satisfy q >= 0, r > 0")
            mp = ModelProblem(m=1, q=float(q), r=float(r))
            feas = mp.feasibility_scalar()
            sir = mp.sir_scalar()
            opt = mp.opt_scalar()
            points.append(
                ConePoint(
                    q=float(q),
                    r=float(r),
                    feas_scalar=feas,
                    sir_scalar=sir,
                    opt_scalar=opt,
                    region=classify_region(feas, sir, opt, threshold),
                )
            )
    return points


def write_cone_csv(path, points) -> None:
    from ._csv import write_csv

    rows = [
        (p.q, p.r, p.feas_scalar, p.sir_scalar, p.opt_scalar, p.region) for p in points
    ]
    write_csv(path, ["q", "r", "feas_scalar", "sir_scalar", "opt_scalar", "region"], rows)


def write_gp_csv(path, rows) -> None:
    """GP sweep CSV: L,h,frob_discrete,frob_operator,eff_dim rows."""
    from ._csv import write_csv

    write_csv(path, ["L", "h", "frob_discrete", "frob_operator", "eff_dim"], rows)
