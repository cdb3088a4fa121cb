"""Exception hierarchy shared by all modules."""


class WeakNoiseError(Exception):
    """Base class for every error raised by :mod:`weaknoise`."""


class ContractError(WeakNoiseError, ValueError):
    """Inputs violate a documented precondition (order mismatch, bad sizes, ...)."""


class DimensionError(ContractError):
    pass


class TruncationError(ContractError):
    """A series or matrix is too short for the requested construction."""


class InvariantError(ContractError):
    pass


class DomainError(WeakNoiseError, ValueError):
    """A point lies outside the region where a map or branch is defined."""


class SingularityError(WeakNoiseError, ArithmeticError):
    """Evaluation too close to a branch point or a vanishing derivative."""


class ConvergenceError(WeakNoiseError, RuntimeError):
    pass


class RootNotFoundError(WeakNoiseError, RuntimeError):
    pass


class DegenerateRootError(WeakNoiseError, ArithmeticError):
    """The spectral determinant has a (numerically) double root at z0."""


class AccuracyError(WeakNoiseError, RuntimeError):
    """A numerical quadrature could not certify the requested accuracy."""


class CompletenessError(WeakNoiseError, ValueError):
    """A required prime cycle is missing from an assembled set."""
