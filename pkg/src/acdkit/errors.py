"""Exception types shared across the package."""


class AcdKitError(Exception):
    """Base class for all package errors."""


class NoSolutionError(AcdKitError):
    """The tail-index equation has no positive root for the given alpha."""


class NonFiniteMomentError(AcdKitError):
    """A Monte Carlo moment estimate came out non-finite."""


class DenominatorNearZeroError(AcdKitError):
    """The tail-constant denominator is statistically indistinguishable from zero."""


class InfiniteVarianceError(AcdKitError):
    """A variance constant was requested in a regime where it does not exist."""


class BudgetExceededError(AcdKitError):
    """A simulation exceeded its hard event budget."""


class GridOutOfRangeError(AcdKitError):
    """A counting grid extends outside the observation window."""


class NonPositivePsiError(AcdKitError):
    """The conditional duration rate became non-positive (defensive check)."""


class DegenerateSeriesError(AcdKitError):
    """The duration series carries no curvature (for example, all values equal)."""


class SingularInformationError(AcdKitError):
    """The observed information matrix is singular or not positive definite."""


class InvalidKError(AcdKitError):
    """The order-statistics count k is outside [1, n-1]."""


class NonPositiveDataError(AcdKitError):
    """Tail estimation requires strictly positive data."""


class RegimeMismatchError(AcdKitError):
    """A normalization was requested outside its tail-index regime."""


class TooFewSamplesError(AcdKitError):
    """Not enough samples for the requested statistic."""


class EmptyInputError(AcdKitError):
    """An input sample or reference was empty."""


class ExcessiveFailuresError(AcdKitError):
    """Too many replications failed for the experiment to be trustworthy."""


class NonMonotoneTimesError(AcdKitError):
    """Event times must be strictly increasing."""


class EmptyFileError(AcdKitError):
    """An event-time file contained no usable rows."""
