"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes; library users can catch the base
classes. Everything derives from JointBmaError so a single except clause
can fence off library failures.
"""

__all__ = [
    "JointBmaError",
    "ContractError",
    "SpecificationError",
    "CapacityError",
    "NumericalDomainError",
    "DegenerateDataError",
    "ConvergenceError",
    "ParseError",
]


class JointBmaError(Exception):
    """Base class for all package errors."""


class ContractError(JointBmaError, ValueError):
    """An API precondition was violated (wrong convention, improper prior
    where a proper one is required, mismatched metadata)."""


class SpecificationError(JointBmaError, ValueError):
    """A model-space or factor specification is internally inconsistent."""


class CapacityError(JointBmaError, ValueError):
    """The request exceeds a hard size cap."""


class NumericalDomainError(JointBmaError, ArithmeticError):
    """A matrix is outside the numerical domain of an operation:
    not positive definite, effectively singular, or causing overflow."""


class DegenerateDataError(JointBmaError, ValueError):
    """The data admit no regular fit (for example a zero fitted margin in
    a log-linear model, detected by parameter divergence)."""


class ConvergenceError(JointBmaError, RuntimeError):
    """An iterative routine failed to converge. Carries the last iterate."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class ParseError(JointBmaError, ValueError):
    """A file or config could not be parsed. Message carries the location."""
