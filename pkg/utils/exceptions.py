"""
Exception hierarchy for the distributed MAC toolkit

Domain errors subclass ValueError/IndexError so callers that only know the
builtin types still catch them.
"""

from typing import Optional


class DmacError(Exception):
    """Base class for every error raised by the toolkit"""


class DomainError(DmacError, ValueError):
    """Invalid argument or violated model invariant"""


class IndexRangeError(DomainError, IndexError):
    """Index outside the governing alphabet, option list or user set"""


class WeightError(DomainError):
    """Weight assignment missing a vector or violating sum(exp(-N*alpha)) = 1"""


class CapExceededError(DmacError):
    """An enumeration or memory cap would be exceeded"""

    def __init__(self, what: str, count: float, cap: float):
        self.what = what
        self.count = count
        self.cap = cap
        super().__init__(f"{what}: {count} exceeds cap {cap}")


class InputFormatError(DmacError):
    """Malformed input document"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
