"""Exception hierarchy shared across the laboratory."""


class CalderonLabError(Exception):
    """Base class for all errors raised by this package."""


class IntegratorFailure(CalderonLabError):
    """Adaptive ODE integration could not proceed (step underflow or
    non-finite state).  Carries the abscissa where integration stopped."""

    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (at x={x:.6g})")
        self.x = x


class SingularSystemError(CalderonLabError):
    """Banded factorization failed or produced an unusable solution."""


class BracketError(CalderonLabError):
    """Root bracketing failed (no sign change, or search window exhausted)."""


class PoleError(CalderonLabError):
    """A Weyl function was requested at (numerically) a zero of the
    characteristic function."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class AdmissibilityError(CalderonLabError):
    """Inputs violate a precondition of the construction being run
    (spectral parameter too close to the Dirichlet spectrum, no
    lower/upper solution case applies, wrong dimension, ...)."""


class PositivityError(CalderonLabError):
    """A quantity that must stay strictly positive did not."""


class ConvergenceError(CalderonLabError):
    """An iterative solve did not converge within its iteration budget."""


class RoundTripError(CalderonLabError):
    """An internal consistency reconstruction missed its tolerance."""
