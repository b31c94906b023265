"""Exception hierarchy shared across the package."""


class DcsmoothError(Exception):
    """Base class for all errors raised by this package."""


class InvalidValueError(DcsmoothError):
    """A value outside (-inf, +inf] (NaN or -inf) entered a construction site."""


class ImproperFunctionError(DcsmoothError):
    """A grid function with no finite value anywhere."""


class GridMismatchError(DcsmoothError):
    """Two grid functions that were expected to share a grid do not."""


class VerificationFailureError(DcsmoothError):
    """A sampled bound claimed by a constant estimate failed beyond tolerance."""


class InfiniteValueInSupError(DcsmoothError):
    """sup-convolution applied to a function with +inf values."""


class ScaleOrderError(DcsmoothError):
    """Smoothing scales supplied in an order the operation forbids."""


class UnsupportedKernelError(DcsmoothError):
    """A fast path invoked with a kernel it does not implement."""


class NotConvexError(DcsmoothError):
    """Certification of grid convexity failed."""


class DegenerateHullError(DcsmoothError):
    """The 2D point set is affinely degenerate; no full-dimensional lower hull."""


class SlopeRangeTooNarrowError(DcsmoothError):
    """The slope grid cannot support all subgradients of the input."""


class EmptySetError(DcsmoothError):
    """A node set that must be nonempty is empty."""


class PreconditionViolatedError(DcsmoothError):
    """An inequality assumed by a check does not hold on the inputs."""


class ExpressionError(DcsmoothError):
    """Parsing, validation, or evaluation of an expression failed.

    Carries a position (offset into the source string) so callers can point
    at the offending token.
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ConfigError(DcsmoothError):
    """A run configuration is malformed; the message names the offending field."""
