"""Exception hierarchy shared by every pedsafe module."""
from typing import Optional


class PedsafeError(Exception):
    """Base class for all errors raised by pedsafe."""


class DomainError(PedsafeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(PedsafeError, ArithmeticError):
    """A series, continued fraction or root search stopped before converging.

    Callers evaluating the closed-form beta-difference density catch this and
    retry on the convolution path.
    """


class UnsatisfiableError(PedsafeError):
    """A design target cannot be met inside the configured search range."""


class DegenerateError(PedsafeError, ArithmeticError):
    """A statistic is undefined for the supplied data (e.g. a zero denominator)."""


class UsageError(PedsafeError):
    """Invalid command-line flags or configuration keys."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class SchemaError(PedsafeError):
    """An input table does not match its declared schema."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class EmptyTableError(SchemaError):
    """An input table has a header but no data rows (or no content at all)."""
