"""Exception hierarchy.

Everything numerical that can fail at runtime (as opposed to a caller
passing garbage, which raises ValueError) derives from NumericalError so
the CLI can map it to a dedicated exit code.
"""


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a usable result."""


class CholeskyError(NumericalError):
    """Matrix is not positive (semi-)definite to working precision."""


class JacobiConvergenceError(NumericalError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi sweeps did not converge: off-diagonal residual "
            f"{residual:.3e} after {sweeps} sweeps"
        )
        self.residual = residual
        self.sweeps = sweeps


class RiccatiConvergenceError(NumericalError):
    def __init__(self, residual: float, iterations: int, last_iterate=None):
        super().__init__(
            f"Riccati fixed-point iteration did not converge: residual "
            f"{residual:.3e} after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations
        self.last_iterate = last_iterate


class MinimizeError(NumericalError):
    """Quasi-Newton minimization failed (line search, max iterations, or
    a non-positive-definite Hessian at the reported minimizer)."""


class RootFindError(NumericalError):
    """The scalar equation along a sampling ray has no usable root."""


class DegenerateWeightsError(NumericalError):
    """All importance weights are zero (log-sum-exp is -inf)."""


class IntegrationError(NumericalError):
    """ODE integration failed (step underflow, non-finite right-hand side,
    or trajectory blow-up)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
