"""Exception hierarchy for the toolkit.

Three branches map onto the CLI exit codes: ``UsageError`` (exit 2) for
bad invocations, ``DataError`` (exit 3) for inputs that are malformed,
missing, or too short, and ``NumericalError`` (exit 4) for numerical
procedures that cannot produce a valid result.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class UsageError(ToolkitError):
    """Invalid command-line invocation or configuration."""


class DataError(ToolkitError):
    """Input data violates a precondition of the requested operation."""


class NumericalError(ToolkitError):
    """A numerical procedure failed to produce a usable result."""


# -- series / preprocessing -------------------------------------------------

class MissingData(DataError):
    """Operation requires a gap-free series but missing values are present."""


class InsufficientLength(DataError):
    """Series is too short for the requested differencing degree."""


class ArityMismatch(DataError):
    """Number of supplied head values does not match the integration degree."""


class DegenerateRange(DataError):
    """All observed values are equal; min-max scaling is undefined."""


class UnfillableGap(DataError):
    """An imputation window contains no observed values."""


class SeriesTooShort(DataError):
    """Series is shorter than the operation's minimum length."""


class PeriodOutOfRange(DataError):
    """Seasonal period is outside the valid range for the series."""


# -- model estimation -------------------------------------------------------

class InsufficientData(DataError):
    """Not enough observations to fit the requested model order."""


class NonStationaryParams(NumericalError):
    """AR/MA coefficients have roots on or inside the unit circle."""


# -- grid search ------------------------------------------------------------

class TooManySegments(DataError):
    """Segmentation would produce segments below the minimum size."""


class AllCandidatesFailed(NumericalError):
    """No grid candidate produced a finite information criterion."""


class WorkerFailure(NumericalError):
    """A worker crashed; used to label candidates that failed after retry."""


# -- evaluation -------------------------------------------------------------

class LengthMismatch(DataError):
    """Paired inputs differ in length."""


class EmptyInput(DataError):
    """Operation requires at least one observation."""


class ZeroVariance(DataError):
    """Sample has zero variance where positive variance is required."""


class DegenerateResiduals(DataError):
    """Residual vector is all zeros; the statistic is undefined."""


class SampleSizeOutOfRange(DataError):
    """Sample size is outside the test's validity bounds."""


class RankDeficient(DataError):
    """Regressor matrix is not full column rank."""


class TooFewObservations(DataError):
    """Fewer observations than regression parameters."""


# -- benchmarking -----------------------------------------------------------

class NonPositiveTime(DataError):
    """Timing values must be strictly positive."""


class SweepAborted(NumericalError):
    """A benchmark sweep was aborted by a propagated search error.

    Carries the records completed so far in ``partial_records``.
    """

    def __init__(self, message, partial_records=()):
        super().__init__(message)
        self.partial_records = tuple(partial_records)


# -- ingestion --------------------------------------------------------------

class MalformedCsv(DataError):
    """CSV input could not be parsed."""


class DuplicateKey(DataError):
    """Duplicate (timestamp, group) row in the input."""


class UnknownColumn(DataError):
    """A referenced column is absent from the CSV header."""
