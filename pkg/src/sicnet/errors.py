"""Exception hierarchy shared by all sicnet modules."""


class SicnetError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SicnetError, ValueError):
    """An input violates a documented precondition (wrong range, NaN, ...)."""


class NumericsError(SicnetError, ArithmeticError):
    """A numerical routine failed to converge within its budget."""


class ConfigError(SicnetError, ValueError):
    """A configuration file or dictionary violates the schema."""


class DegenerateReaError(DomainError):
    """Range-expansion quantities requested for a network without bias.

    Raised instead of silently returning a zero distribution so that
    misconfigured bias studies fail loudly.
    """
