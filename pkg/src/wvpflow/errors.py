"""Exception types shared across the package."""


class WvpflowError(Exception):
    """Base class for all package errors."""


class DomainError(WvpflowError):
    """An argument lies outside the admissible radial interval."""


class StateError(WvpflowError):
    """An operation was requested before required tables were built."""


class ConfigError(WvpflowError):
    """A configuration value is invalid or unknown."""


class FieldShapeError(WvpflowError):
    """A node field does not match the grid it is used with."""


class RangeError(WvpflowError):
    """A profile inversion was requested outside the tabulated range."""


class DomainEscapeError(WvpflowError):
    """The evolving graph left the working radial interval.

    Carries the offending node index and radius so the caller can report
    where the run failed instead of silently clamping.
    """

    def __init__(self, message, node=None, radius=None, t=None):
        super().__init__(message)
        self.node = node
        self.radius = radius
        self.t = t


class SchemeInstabilityError(WvpflowError):
    """Non-finite values appeared during time stepping."""


class NotApplicableError(WvpflowError):
    """A check was requested for a space or run it does not apply to."""
