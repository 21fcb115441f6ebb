"""Exception types shared across the package.

The CLI maps these onto exit codes: data errors (ingestion) exit 3,
fitting errors exit 4, usage errors exit 2.
"""


class MercastError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSeriesError(MercastError):
    """Series has no usable variation (e.g. zero variance for the ACF)."""


class InsufficientDataError(MercastError):
    """Series is too short for the requested model or transform."""


class SingularForecastError(MercastError):
    """A multiplicative-error recursion hit a zero one-step forecast."""


class FitFailedError(MercastError):
    """Optimization could not improve on the starting values, or every
    candidate in an automatic search failed."""


class DifferentiationError(MercastError):
    """Non-finite objective evaluations while forming numerical derivatives."""


class DataError(MercastError):
    """Base class for ingestion problems (exit code 3 in the CLI)."""


class SeriesNotFoundError(DataError):
    """Requested MSN code is absent from the input file."""


class DiscontinuityError(DataError):
    """Monthly observations are not contiguous after filtering."""


class MerParseError(DataError):
    """A row of the input CSV could not be parsed."""
