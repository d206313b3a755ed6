"""Exception hierarchy shared across the package.

Every error raised by bogo derives from :class:`BogoError`, so callers can
catch one type at a service boundary.  Validation problems (bad shapes, bad
configs, out-of-domain points) and numerical failures (non-positive-definite
matrices, degenerate data) are kept in separate branches because the CLI maps
them to different exit codes.
"""


class BogoError(Exception):
    """Base class for all package errors."""


class ValidationError(BogoError):
    """Bad input that a caller could have checked up front."""


class NumericalError(BogoError):
    """Failure inside a numerical routine on otherwise well-formed input."""


class DimensionMismatch(ValidationError):
    """Vector/matrix shapes do not agree."""


class NotPositiveDefinite(NumericalError):
    """Cholesky pivot stayed non-positive after the maximum jitter.

    Usually signals degenerate hyperparameters or duplicated noise-free
    design points.
    """


class SingularBlock(NumericalError):
    """A block of a partitioned matrix is not invertible."""


class DegenerateResiduals(NumericalError):
    """Residual variance collapsed to zero (constant responses)."""


class AllStartsFailed(NumericalError):
    """Every start of a multistart optimization raised a numerical error."""


class UnsupportedOrder(ValidationError):
    """Polynomial basis order outside the supported range."""


class TooFewPoints(ValidationError):
    """Not enough distinct design sites for the requested diagnostic."""


class NoisyPosterior(ValidationError):
    """Expected improvement applied to a posterior with observation noise."""


class EmptyCandidateSet(ValidationError):
    """Knowledge-gradient candidate set is empty."""


class InvalidConfig(ValidationError):
    """Campaign configuration violates an invariant."""


class OutOfDomain(ValidationError):
    """Design point lies outside the campaign domain."""


class DuplicateNoiseFreePoint(ValidationError):
    """Exact repeat of a design point in a noise-free campaign."""


class NoModelYet(ValidationError):
    """Operation requires a fitted surrogate but none exists."""


class CorruptStateFile(BogoError):
    """Persisted campaign state cannot be parsed or is inconsistent."""
