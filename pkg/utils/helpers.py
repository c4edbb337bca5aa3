"""
Helper utilities for the distributed MAC toolkit

General-purpose helpers shared by the computation modules and the CLI:
user-subset bitmasks, sha256 digests, timestamp formatting and logging setup.
"""

import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, FrozenSet, Iterable, List, Optional

import colorlog

from utils.exceptions import InputFormatError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str = 'INFO') -> None:
    """Configure the root logger with colored stderr output"""
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter('%(log_color)s' + LOG_FORMAT))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


# ----- user subsets -----
# Users are numbered 1..K; bit k-1 of a mask stands for user k.

def subset_to_mask(subset: Iterable[int]) -> int:
    mask = 0
    for user in subset:
        mask |= 1 << (user - 1)
    return mask


def mask_to_subset(mask: int) -> FrozenSet[int]:
    users = []
    user = 1
    while mask:
        if mask & 1:
            users.append(user)
        mask >>= 1
        user += 1
    return frozenset(users)


def subsets_of(universe: Iterable[int]) -> List[FrozenSet[int]]:
    """All subsets of a user set in ascending bitmask order (empty set first)"""
    full = subset_to_mask(universe)
    return [mask_to_subset(mask) for mask in range(full + 1) if not mask & ~full]


def proper_subsets_of(universe: Iterable[int]) -> List[FrozenSet[int]]:
    universe = frozenset(universe)
    return [s for s in subsets_of(universe) if s != universe]


def format_subset(subset: Iterable[int]) -> str:
    return '{' + ','.join(str(k) for k in sorted(subset)) + '}'


# ----- digests -----
# Manifests record sha256 digests of every input and output.

def calculate_file_hash(filepath: str) -> str:
    """sha256 of a file, read in 64 KiB chunks"""
    hasher = hashlib.sha256()
    try:
        with open(filepath, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b""):
                hasher.update(chunk)
    except OSError as e:
        raise InputFormatError(f"cannot read {filepath}: {e}") from e
    return hasher.hexdigest()


def calculate_text_hash(text: str) -> str:
    """sha256 of the UTF-8 encoding, i.e. of the bytes written for ``text``"""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def canonical_json(data: Any) -> str:
    """Byte-stable JSON text: sorted keys, two-space indent, trailing newline"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True,
                      default=_json_default) + '\n'


def calculate_object_hash(data: Any) -> str:
    return calculate_text_hash(canonical_json(data))


# ----- formatting -----

def format_timestamp(dt: Optional[datetime] = None) -> str:
    """ISO 8601 in UTC; manifests record run start times this way"""
    return (dt or datetime.now(timezone.utc)).isoformat()


def format_duration(seconds: float) -> str:
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(seconds, 60)
    if minutes < 60:
        return f"{minutes:.0f}m {secs:.0f}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours:.0f}h {minutes:.0f}m"
