"""Exception hierarchy shared by every module."""


class ProtocolError(Exception):
    """Base class for errors raised by this package."""


class InputDomainError(ProtocolError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class ConfigurationError(ProtocolError, ValueError):
    """A parameter combination is invalid (unknown workload, bad schedule, ...)."""


class InvariantError(ProtocolError, AssertionError):
    """An internal invariant was observed to be violated at runtime."""


class UnsupportedQueryError(ProtocolError, TypeError):
    """A tree node carries a query the requested operation cannot handle."""


class FeasibilityError(ProtocolError, ValueError):
    """A brute-force routine was asked to work beyond its size limits."""
