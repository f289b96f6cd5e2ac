"""Two-scale Lorenz-96 and the discrete model-error (discrepancy) pipeline.

The resolved variables x_k feel the unresolved y_{j,k} only through the
block averages z_k = (h_x / J) sum_j y_{j,k}.  Treating the z_k = 0 system
as the tractable reduced model, the per-step discrepancy

    z^{n+1} = (x^{n+1} - x^n) / delta - R_delta(x^n)

is computable from resolved snapshots alone, with no differentiation of
continuous signals and no integrator-order games: R_delta is *defined* by
the chosen discrete step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import IntegrationError
from .rng import RngStream


@dataclass
class Lorenz96TwoScale:
    """Cyclic two-scale Lorenz-96.

    Indices wrap as x_{k+K} = x_k, y_{j,k+K} = y_{j,k}, y_{j+J,k} =
    y_{j,k+1}; the y state is stored flat with layout (j, k) -> k*J + j,
    which makes the last wrap a plain cyclic shift of the flat vector.
    """

    K: int = 18
    J: int = 20
    F: float = 10.0
    eps: float = 0.5
    h_x: float = -1.0
    h_y: float = 1.0

    @property
    def y_dim(self) -> int:
        return self.K * self.J

    def coupling(self, y: np.ndarray) -> np.ndarray:
        """z_k = (h_x / J) * sum_j y_{j,k}."""
        return (self.h_x / self.J) * np.asarray(y).reshape(self.K, self.J).sum(axis=1)

    def rhs(self, x: np.ndarray, y: np.ndarray):
        """(dx/dt, dy/dt) of the coupled system; reference implementation."""
        return _kernels._l96_full_rhs_np(
            np.asarray(x, dtype=np.float64),
            np.asarray(y, dtype=np.float64),
            self.K, self.J, self.F, self.eps, self.h_x, self.h_y,
        )

    def max_dt(self) -> float:
        return self.eps / 50.0


@dataclass
class Lorenz96Trajectory:
    x: np.ndarray          # (n_snapshots, K) resolved snapshots incl. the start
    dt: float
    thin: int
    x_final: np.ndarray
    y_final: np.ndarray

    @property
    def snapshot_spacing(self) -> float:
        return self.dt * self.thin


def integrate_full(
    model: Lorenz96TwoScale,
    x0: np.ndarray,
    y0: np.ndarray,
    dt: float,
    n_steps: int,
    thin: int = 1,
) -> Lorenz96Trajectory:
    """Fixed-step RK4 trajectory of the coupled system.

    Resolved snapshots are kept every `thin` steps (the unresolved state is
    returned only at the endpoint).  dt must resolve the fast scale:
    dt <= eps / 50.
    """
    if dt <= 0 or n_steps < 0:
        raise ValueError("need dt > 0 and n_steps >= 0")
    if dt > model.max_dt() * (1 + 1e-12):
        raise ValueError(
            f"dt={dt} does not resolve the fast scale (need dt <= eps/50 = {model.max_dt():.4g})"
        )
    if n_steps % thin != 0:
        raise ValueError("n_steps must be a multiple of thin")
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    if x0.shape != (model.K,) or y0.shape != (model.y_dim,):
        raise ValueError("initial state has wrong shape")
    xs, x_final, y_final, blowup = _kernels.l96_full_integrate(
        x0, y0, model.K, model.J, model.F, model.eps, model.h_x, model.h_y,
        dt, n_steps, thin,
    )
    if blowup >= 0:
        raise IntegrationError(
            f"trajectory blew up (non-finite state) at step {blowup}", step=int(blowup)
        )
    return Lorenz96Trajectory(x=xs, dt=dt, thin=thin, x_final=x_final, y_final=y_final)


def reduced_rhs(x: np.ndarray, F: float) -> np.ndarray:
    """Right-hand side of the reduced (z_k = 0) system; vectorized over rows."""
    return _kernels._l96_reduced_rhs_np(np.asarray(x, dtype=np.float64), F)


def reduced_step(x: np.ndarray, delta: float, F: float = 10.0) -> np.ndarray:
    """One RK4 step of the reduced system; the discrete one-step model.

    R_delta(x) = (reduced_step(x, delta) - x) / delta is the increment map
    the discrepancy sequence is measured against.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = _kernels.l96_reduced_rk4_step(x, delta, F)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("reduced step produced a non-finite state")
    return out


def integrate_reduced(x0, F, dt, n_steps, thin: int = 1):
    """RK4 trajectory of the reduced system (snapshots every `thin` steps)."""
    if n_steps % thin != 0:
        raise ValueError("n_steps must be a multiple of thin")
    xs, x_final, blowup = _kernels.l96_reduced_integrate(
        np.asarray(x0, dtype=np.float64), F, dt, n_steps, thin
    )
    if blowup >= 0:
        raise IntegrationError(f"reduced trajectory blew up at step {blowup}", step=int(blowup))
    return xs


@dataclass
class DiscrepancySeries:
    """The sampled model-error sequence with optional characterization."""

    delta: float
    z: np.ndarray                    # (N, K) discrepancy vectors
    acf: np.ndarray | None = None    # autocorrelation of the chosen component
    acf_component: int = 0
    ar_fit: object | None = None

    def component(self, k: int = 0) -> np.ndarray:
        return self.z[:, k]


def extract_discrepancy(x_traj: np.ndarray, delta: float, F: float = 10.0) -> DiscrepancySeries:
    """Exact per-snapshot discrepancy of uniformly spaced resolved data.

    z^{n+1} = (x^{n+1} - x^n)/delta - R_delta(x^n), evaluated as
    (x^{n+1} - reduced_step(x^n)) / delta; pure arithmetic on the data.
    """
    x_traj = np.asarray(x_traj, dtype=np.float64)
    if x_traj.ndim != 2 or x_traj.shape[0] < 2:
        raise ValueError("need at least two snapshots to measure a discrepancy")
    predicted = reduced_step(x_traj[:-1], delta, F)
    z = (x_traj[1:] - predicted) / delta
    return DiscrepancySeries(delta=delta, z=z)


def default_initial_state(model: Lorenz96TwoScale, rng: RngStream):
    gen = rng.generator()
    x0 = gen.standard_normal(model.K)
    y0 = 0.1 * gen.standard_normal(model.y_dim)
    return x0, y0


def simulate_resolved(
    model: Lorenz96TwoScale,
    delta: float,
    n_snapshots: int,
    rng: RngStream,
    spinup: float = 10.0,
) -> np.ndarray:
    """Spin up onto the attractor, then record resolved snapshots at spacing delta.

    The integrator step is min(delta, eps/50), rounded so that delta is an
    exact multiple; the spin-up segment is discarded before any statistics.
    """
    if n_snapshots < 2:
        raise ValueError("need at least two snapshots")
    sub = max(1, math.ceil(delta / model.max_dt() - 1e-12))
    dt = delta / sub
    x0, y0 = default_initial_state(model, rng)
    spin_steps = max(1, math.ceil(spinup / dt))
    spun = integrate_full(model, x0, y0, dt, spin_steps, thin=spin_steps)
    traj = integrate_full(
        model, spun.x_final, spun.y_final, dt, (n_snapshots - 1) * sub, thin=sub
    )
    return traj.x


def characterize(
    series: DiscrepancySeries,
    component: int = 0,
    max_lag: int = 100,
    order_max: int = 10,
) -> DiscrepancySeries:
    """Fill in the ACF and AR representation of one discrepancy component."""
    from .timeseries import autocorrelation, fit_ar

    values = series.component(component)
    series.acf = autocorrelation(values, max_lag)
    series.acf_component = component
    series.ar_fit = fit_ar(values, order_max)
    return series


def write_acf_csv(path, acf) -> None:
    from ._csv import write_csv

    write_csv(path, ["lag", "acf"], list(enumerate(np.asarray(acf))))


def write_discrepancy_csv(path, series: DiscrepancySeries) -> None:
    from ._csv import write_csv

    K = series.z.shape[1]
    header = ["n"] + [f"z_{k + 1}" for k in range(K)]
    rows = [[n + 1, *series.z[n]] for n in range(series.z.shape[0])]
    write_csv(path, header, rows)
