"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ReesDiagError(Exception):
    """Base class for all errors raised by this package."""


class VariableMismatch(ReesDiagError):
    pass


class PrecisionIncrease(ReesDiagError):
    pass


class PrecisionExhausted(ReesDiagError):
    """A result would depend on coefficients beyond the tracked t-precision."""


class DimensionMismatch(ReesDiagError):
    pass


class NotABasis(ReesDiagError):
    pass


class NotDiagonalizing(ReesDiagError):
    pass


class NotInTorsor(ReesDiagError):
    """The transition matrix between two bases breaks the divisibility constraints."""


class IncidenceViolation(ReesDiagError):
    pass


class NotASimplex(ReesDiagError):
    pass


class NotIndependent(ReesDiagError):
    pass


class NestingViolated(ReesDiagError):
    pass


class NotGradedBasis(ReesDiagError):
    pass


class NotWeightCompatible(ReesDiagError):
    pass


class InvalidFiltration(ReesDiagError):
    pass


class UnsupportedDimension(ReesDiagError):
    pass


class ParseError(ReesDiagError):
    pass


class SchemaVersionError(ReesDiagError):
    pass


class InvariantViolation(ReesDiagError):
    pass


class Obstruction(ReesDiagError):
    """Simultaneous diagonalization is impossible.

    ``table`` holds the graded table whose total dimension exceeds the rank;
    callers inspect it to see which multi-index overflows.
    """

    def __init__(self, table, rank: int, message: str | None = None):
        self.table = table
        self.rank = rank
        super().__init__(message or f"graded dimension {table.total} != rank {rank}")


class NotDiagonalizableMod(Obstruction):
    """Obstruction for the image filtrations on ``V / t^i V``."""
