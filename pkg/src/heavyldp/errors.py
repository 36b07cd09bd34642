"""Exception types shared across the package."""


class ModelError(ValueError):
    """Base class for invalid inputs to any heavyldp routine."""


class DomainError(ModelError):
    """An argument lies outside the domain of the function."""


class IndexUnknownError(ModelError):
    """The regular-variation index of a tail exponent was not declared."""


class ConstraintError(ModelError):
    """A strategy parameter violates its admissibility constraint."""


class UnsupportedSetError(ModelError):
    """An event set variant or nesting the routine cannot handle."""
