"""
Simulation data models

Realized codebooks, threshold policies, decoder outcomes and per-trial
records for the threshold-decoder simulator.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

import numpy as np

from config import Config
from models.code_models import CodeIndexVector
from utils.exceptions import CapExceededError, DomainError, IndexRangeError
from utils.helpers import format_subset

CODEBOOK_CAP = Config.CODEBOOK_CAP
COUNT_ROUNDING = 1e-9


class ErrorMode(Enum):
    """Which error-probability definition a trial is judged by"""
    EQ1 = "eq1"    # two zones, wrong decode is the only error outside
    EQ6 = "eq6"    # two zones, anything but collision is an error outside
    EQ10 = "eq10"  # three zones, all users of D relevant
    EQ12 = "eq12"  # three zones, only user 1 relevant

    @property
    def three_zone(self) -> bool:
        return self in (ErrorMode.EQ10, ErrorMode.EQ12)


def codeword_count(rate: float, blocklength: int, cap: int = CODEBOOK_CAP) -> int:
    """max(floor(e^(N r)), 1), refusing counts above ``cap``"""
    exponent = blocklength * rate
    if exponent > math.log(cap) + 1:
        raise CapExceededError("codebook size floor(e^(N r))", math.exp(min(exponent, 700.0)), cap)
    count = max(1, int(math.floor(math.exp(exponent) + COUNT_ROUNDING)))
    if count > cap:
        raise CapExceededError("codebook size floor(e^(N r))", count, cap)
    return count


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """Codeword matrices per (user, option), shared by transmitters and receiver

    ``books[(k, j)]`` holds the codebook of user k under option j as an
    integer array of shape (number of codewords, N).
    """
    blocklength: int
    books: Mapping[Tuple[int, int], np.ndarray]
    seed: Optional[int] = None

    def __post_init__(self):
        books = {}
        for key, words in self.books.items():
            words = np.array(words, dtype=np.int64)
            if words.ndim != 2 or words.shape[1] != self.blocklength or words.shape[0] < 1:
                raise DomainError(
                    f"codebook {key} must have shape (M >= 1, N={self.blocklength}), got {words.shape}"
                )
            words.setflags(write=False)
            books[tuple(key)] = words
        object.__setattr__(self, 'books', books)

    def codewords(self, user: int, option: int) -> np.ndarray:
        try:
            return self.books[(user, option)]
        except KeyError:
            raise IndexRangeError(f"no codebook for user {user} option {option}") from None

    def count(self, user: int, option: int) -> int:
        return self.codewords(user, option).shape[0]

    def message_counts(self, g: CodeIndexVector) -> Tuple[int, ...]:
        return tuple(self.count(k, g.option(k)) for k in range(1, g.num_users + 1))

    def encode(self, g: CodeIndexVector, messages: Iterable[int]) -> np.ndarray:
        """Transmitted block of shape (K, N) for one message per user"""
        return np.stack([
            self.codewords(k, g.option(k))[w]
            for k, w in enumerate(messages, start=1)
        ])


@dataclass(frozen=True)
class ThresholdPolicy:
    """Offsets t per (g, g~, S); the threshold is exp(-N t) times the g~-side likelihood"""
    offsets: Mapping[str, float] = field(default_factory=dict)
    default_offset: float = 0.0
    description: str = "likelihood-ratio thresholds with per-triple offsets"

    def __post_init__(self):
        offsets = {str(k): float(v) for k, v in self.offsets.items()}
        object.__setattr__(self, 'offsets', offsets)
        object.__setattr__(self, 'default_offset', float(self.default_offset))
        bad = [k for k, v in offsets.items() if not math.isfinite(v)]
        if bad or not math.isfinite(self.default_offset):
            raise DomainError(f"threshold offsets must be finite; offending: {bad[:10]}")

    @staticmethod
    def key(g: CodeIndexVector, g_tilde: CodeIndexVector, subset: Iterable[int]) -> str:
        return f"{g}|{g_tilde}|{format_subset(subset)}"

    def offset(self, g: CodeIndexVector, g_tilde: CodeIndexVector, subset: Iterable[int]) -> float:
        return self.offsets.get(self.key(g, g_tilde, subset), self.default_offset)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'description': self.description,
            'default_offset': self.default_offset,
            'offsets': dict(sorted(self.offsets.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ThresholdPolicy':
        return cls(
            offsets=data.get('offsets', {}),
            default_offset=data.get('default_offset', 0.0),
            description=data.get('description', cls.description),
        )


@dataclass(frozen=True)
class DecodeOutcome:
    """Decoded(w_D, g) or Collision"""
    decoded: bool
    decode_users: Tuple[int, ...] = ()
    messages: Tuple[int, ...] = ()
    vector: Optional[CodeIndexVector] = None
    log_likelihood: float = -math.inf

    @classmethod
    def collision(cls, decode_users: Tuple[int, ...] = ()) -> 'DecodeOutcome':
        return cls(decoded=False, decode_users=tuple(decode_users))

    @property
    def is_collision(self) -> bool:
        return not self.decoded

    def message(self, user: int) -> int:
        return self.messages[self.decode_users.index(user)]

    def matches(self, messages: Tuple[int, ...], g: CodeIndexVector, users: Iterable[int]) -> bool:
        """Decoded and correct (message and option) for every listed user"""
        if not self.decoded:
            return False
        return all(
            self.message(k) == messages[k - 1] and self.vector.option(k) == g.option(k)
            for k in users
        )

    def to_dict(self) -> Dict[str, Any]:
        if not self.decoded:
            return {'outcome': 'collision'}
        return {
            'outcome': 'decoded',
            'messages': {str(k): w for k, w in zip(self.decode_users, self.messages)},
            'g': str(self.vector),
            'log_likelihood': self.log_likelihood,
        }


@dataclass(frozen=True)
class TrialRecord:
    """One Monte Carlo trial: what was sent, what came out, which events fired"""
    vector: CodeIndexVector
    messages: Tuple[int, ...]
    outcome: DecodeOutcome
    error: bool
    events: FrozenSet[str] = frozenset()


def event_key(kind: str, g: CodeIndexVector, g_tilde: CodeIndexVector, subset: Iterable[int]) -> str:
    """Label of a P_m / P_t / P_i event, e.g. ``m[0,0/0|0,1/0|{1}]``"""
    if kind not in ('m', 't', 'i'):
        raise DomainError(f"unknown event kind {kind!r}")
    return f"{kind}[{ThresholdPolicy.key(g, g_tilde, subset)}]"
