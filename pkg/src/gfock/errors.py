"""Exception hierarchy shared by every module."""


class GfockError(Exception):
    """Base class for all package errors."""


class ParameterError(GfockError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainError(GfockError, ValueError):
    """A grid or test function does not satisfy a domain precondition."""


class ShapeError(GfockError, ValueError):
    """Operands live on different grids, bases or mode sets."""


class ResolutionError(GfockError, ValueError):
    """A sampling grid is too coarse for the requested computation."""


class LadderError(GfockError, ValueError):
    """An epsilon ladder is too short or not strictly decreasing."""


class CapacityError(GfockError, MemoryError):
    """A basis or workspace would exceed the configured size bound."""


class ContractViolation(GfockError, AssertionError):
    """An input breaks an operator contract (e.g. a non-Hermitian generator)."""


class ConfigError(GfockError, ValueError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
