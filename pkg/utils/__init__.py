"""
Utility modules for the distributed MAC toolkit

Computation lives in the submodules (info_theory, exponents, gep_bounds,
decoder, simulator); only the dependency-free helpers are re-exported here.
"""

from .exceptions import (
    CapExceededError, DmacError, DomainError, IndexRangeError, InputFormatError, WeightError,
)
from .helpers import canonical_json, format_subset, setup_logging

__all__ = [
    'CapExceededError',
    'DmacError',
    'DomainError',
    'IndexRangeError',
    'InputFormatError',
    'WeightError',
    'canonical_json',
    'format_subset',
    'setup_logging',
]
