"""Shared exception types for the solver and analysis modules."""


class QkpsimError(Exception):
    """Base class for all package-specific errors."""


class InvalidParam(QkpsimError, ValueError):
    """A parameter is outside its documented domain."""


class GridMismatch(QkpsimError, ValueError):
    """Two fields that must share a grid do not."""


class NonZeroMean(QkpsimError):
    """An x1-antiderivative was requested for a field with nonzero x1-line means."""


class NoConvergence(QkpsimError):
    """An iterative solver exhausted its iteration budget.

    Carries the iteration count and the final residual norm for diagnostics.
    """

    def __init__(self, message, iterations=None, residual_norm=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


class StepRejected(QkpsimError):
    """Backtracking inside a Newton step failed to produce an admissible iterate."""


class NonPositiveDensity(QkpsimError):
    """A density field violated the positivity requirement."""


class Blowup(QkpsimError):
    """A solution sample exceeded the overflow guard or became non-finite.

    ``time`` is the simulation time at which the guard tripped.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DerivationMismatch(QkpsimError):
    """The symbolic reduction did not collapse to the expected normal form."""


class ParseError(QkpsimError, ValueError):
    """Malformed expression text; ``position`` is the 0-based offending column."""

    def __init__(self, message, position):
        super().__init__(f"{message} (column {position + 1})")
        self.position = position


class DegenerateFit(QkpsimError):
    """Convergence-order fitting received unusable data."""


class WindowExitWarning(UserWarning):
    """A density left the (1/2, 3/2) monitoring window (warning, not an error)."""
