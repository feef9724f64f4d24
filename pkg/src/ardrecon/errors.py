"""Exception hierarchy shared by every module."""


class ArdError(Exception):
    """Base class for all package errors."""


class ParameterError(ArdError, ValueError):
    """An argument is outside its admissible range."""


class StateError(ArdError):
    """An object is in the wrong state for the requested operation."""


class DataError(ArdError, ValueError):
    """Observed data violate a model assumption (e.g. negative counts)."""


class InitializationError(ArdError):
    """A sampler or optimizer could not be started from its initial state."""


class OptimizationError(ArdError):
    """An optimizer diverged. ``state`` holds the last finite iterate."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
