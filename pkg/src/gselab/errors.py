"""Exception hierarchy.

The CLI maps :class:`CapacityError` and :class:`ConfigurationError` to exit
code 2 and every other :class:`GselabError` to exit code 1.
"""


class GselabError(Exception):
    """Base class for all library errors."""


class DimensionError(GselabError, ValueError):
    """Shapes, arities, vertex counts or layer sets do not agree."""


class DomainError(GselabError, ValueError):
    """A value lies outside the domain an object is defined on."""


class ArgumentError(GselabError, ValueError):
    """An argument violates an operation's precondition."""


class CapacityError(GselabError):
    """An exhaustive routine would exceed its enumeration guard."""


class InfeasibleError(GselabError):
    """A constraint set (e.g. microcanonical class masses) admits no solution."""


class UnsupportedError(GselabError):
    """The operation is not defined for this kind of input."""


class ConfigurationError(GselabError):
    """An experiment configuration cannot be executed as written."""


class MalformedInputError(GselabError, ValueError):
    """An instance or config file is not valid JSON or misses required fields."""
