"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
1 for usage/config problems, 2 for bad input data, 3 for numeric failures.
"""

from __future__ import annotations


class FcixError(Exception):
    exit_code = 3


class ConfigError(FcixError, ValueError):
    exit_code = 1


class DataError(FcixError, ValueError):
    exit_code = 2


class NumericError(FcixError, ArithmeticError):
    exit_code = 3


# panel
class NonPositivePrice(DataError):
    pass


class IncompletePanel(DataError):
    pass


class EmptyPanel(DataError):
    pass


class LagTooLarge(DataError):
    pass


# comparison matrices
class NonPositiveWeight(DataError):
    pass


class NotAComparisonMatrix(DataError):
    pass


class DegenerateOrder(DataError):
    pass


class OrderCapExceeded(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class NoConvergence(NumericError):
    pass


class DerivativeNearZero(NumericError):
    pass


class OverflowRisk(NumericError):
    pass


class DegenerateFactor(NumericError):
    pass


# series analytics
class SeriesTooShort(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MisalignedSeries(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class NonPositiveTolerance(DataError):
    pass


class EmptySegment(DataError):
    pass


class InfeasiblePartition(DataError):
    pass


class OptimizationFailure(NumericError):
    pass


class SingularDesign(NumericError):
    pass


# dynamics
class DegenerateParameters(DataError):
    pass


class Blowup(NumericError):
    """Trajectory left the representable region; ``path`` holds the states so far."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class DegenerateWarning(UserWarning):
    """Emitted when a statistic falls back to a default on degenerate input."""
