"""Exception types raised across the package.

Everything derives from :class:`StfreqError` so callers (and the CLI) can
catch package errors with a single except clause.  Data-format errors carry
the offending file and line in their message.
"""


class StfreqError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------------------
# panel / file format
# ---------------------------------------------------------------------------

class MissingHeader(StfreqError):
    """A CSV input is empty or lacks the required header row."""


class UnknownStationColumn(StfreqError):
    """Panel columns and the station table do not describe the same stations."""


class NonNumericValue(StfreqError, ValueError):
    """A cell that must be numeric failed to parse."""


class RaggedRows(StfreqError):
    """A CSV row has the wrong number of fields."""


class DimensionMismatch(StfreqError, ValueError):
    """Coordinates or lag vectors disagree on spatial dimension."""


# ---------------------------------------------------------------------------
# lag geometry / estimators
# ---------------------------------------------------------------------------

class EmptyLagSet(StfreqError):
    """No station or time pairs match the requested lag."""


class BandwidthTooLarge(StfreqError):
    """Smoothing kernel does not fit inside the frequency grid."""


class InsufficientLags(StfreqError):
    """An operation needs more distinct spatial lags than were supplied."""


class IndexOutOfRange(StfreqError, IndexError):
    """A station index does not exist in the panel."""


# ---------------------------------------------------------------------------
# parametric spectra
# ---------------------------------------------------------------------------

class DomainError(StfreqError, ValueError):
    """Argument outside the mathematical domain of a special function."""


class InvalidParams(StfreqError, ValueError):
    """Spectrum parameters violate a model constraint."""


class GridTooCoarse(StfreqError):
    """Quadrature error estimate exceeds the requested tolerance."""


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

class MaxIterations(StfreqError):
    """Optimizer hit its iteration cap before converging."""


class SingularHessian(StfreqError):
    """Criterion Hessian is numerically singular; no covariance available."""


# ---------------------------------------------------------------------------
# independence test
# ---------------------------------------------------------------------------

class TooFewObservations(StfreqError):
    """Series too short to form even one frequency block."""


class RankDeficientSmoother(StfreqError):
    """Smoothing span is smaller than the matrix dimension."""


class SingularMatrix(StfreqError):
    """A smoothed spectral matrix is not positive definite."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class DegenerateTest(StfreqError):
    """The test statistic is undefined for the given inputs."""


class InvalidSmoother(StfreqError):
    """Smoothing parameter incompatible with the matrix dimension."""


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

class InvalidSigma(StfreqError, ValueError):
    """A variance parameter is not strictly positive."""


class NotPositiveDefinite(StfreqError):
    """A covariance matrix has no Cholesky factorization."""
