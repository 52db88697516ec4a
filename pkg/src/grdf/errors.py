"""Exception types shared across the package."""


class GrdfError(Exception):
    """Base class for package errors."""


class ConfigError(GrdfError):
    """A configuration value is invalid; the message names the field."""


class SearchCapExceeded(GrdfError):
    """A lattice scan exceeded its row cap.

    Signals a pathological configuration (e.g. p ~ 0), not a model failure.
    """


class HorizonExhausted(GrdfError):
    """A simulation reached its time horizon before the requested event.

    Carries whatever partial state the caller may want to keep; horizon
    hits are reported (censored), never silently dropped.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class OutOfRange(GrdfError):
    """A query time lies outside the covered range of a path."""


class InsufficientData(GrdfError):
    """Too few samples or curve points for the requested estimate."""


class EmptySetError(GrdfError):
    """A set operation received an empty collection."""
