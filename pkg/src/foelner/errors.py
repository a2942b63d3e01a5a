"""Exception hierarchy shared by all modules.

PreconditionError maps to CLI exit code 2, ConvergenceError to exit code 3.
"""


class FoelnerError(Exception):
    """Base class for all package errors."""


class PreconditionError(FoelnerError):
    """A documented precondition was violated; the operation was refused."""


class ConvergenceError(FoelnerError):
    """An iterative numerical procedure failed to converge within its cap."""


class DescriptorMismatch(PreconditionError):
    """Operands belong to different marked groups."""


class InvalidDescriptor(PreconditionError):
    """Malformed group descriptor (unknown kind or non-positive rank)."""


class InvalidLetter(PreconditionError):
    """Generator index out of range, or a free-group letter used on an abelian group."""


class HeadroomViolation(PreconditionError):
    """Applying an operator would push support beyond the ambient radius.

    Results are never clipped; the operation is refused instead.
    """


class RankDeficiency(PreconditionError):
    """Columns handed to orthonormalization are numerically dependent."""

    def __init__(self, column_index: int, message: str | None = None):
        self.column_index = column_index
        super().__init__(message or f"column {column_index} is numerically dependent on its predecessors")


class UnitaryRequired(PreconditionError):
    """The operator must be a single left-translation unitary L_g."""


class SearchSpaceTooLarge(PreconditionError):
    """Exhaustive enumeration was requested beyond the subset-count cap."""


class SeedRequired(PreconditionError):
    """A stochastic command was invoked without an explicit seed."""
