"""Typed errors shared across the toolkit.

Numerical failure modes are reported as exceptions, never as NaN/inf
sentinels, so callers can tell "this regime excludes the quantity" apart
from "the computation broke".
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DivergentIntegralError(DomainError):
    """The requested integral diverges for these parameters."""


class RegimeError(ValueError):
    """The requested quantity is not defined in the active parameter regime."""


class MethodRangeError(RegimeError):
    """The exponent lies outside the range the expansion method covers."""


class CellBudgetError(RuntimeError):
    """Adaptive integration hit its cell budget before reaching tolerance.

    Carries the best partial result so callers can degrade gracefully.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class ConditioningError(RuntimeError):
    """A least-squares design matrix is too ill-conditioned to trust."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number


class IterationError(RuntimeError):
    """An iterative solver failed to converge; carries the best iterate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class InfeasibleHoleError(ValueError):
    """A hole constraint leaves no admissible boundary degrees of freedom."""
