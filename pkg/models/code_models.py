"""
Code-space data models

This module defines code options g_k = (rate, input distribution), code
ensembles, code index vectors, operation regions/margins and the weight
assignments alpha_g with sum_g exp(-N * alpha_g) = 1.

Rates are in nats per symbol throughout.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import Config
from utils.exceptions import DomainError, IndexRangeError, WeightError
from utils.helpers import calculate_object_hash

PROBABILITY_TOLERANCE = Config.PROBABILITY_TOLERANCE
WEIGHT_TOLERANCE = Config.WEIGHT_TOLERANCE


class RateUnit(Enum):
    """Units accepted for rates at ingestion"""
    NATS = "nats"
    BITS = "bits"

    def to_nats(self, value: float) -> float:
        return value * math.log(2.0) if self is RateUnit.BITS else value


@dataclass(frozen=True)
class CodeOption:
    """One (rate, input distribution) choice available to a user"""
    rate: float
    input_dist: Tuple[float, ...]

    def __post_init__(self):
        dist = tuple(float(p) for p in self.input_dist)
        object.__setattr__(self, 'input_dist', dist)
        object.__setattr__(self, 'rate', float(self.rate))

        if not math.isfinite(self.rate) or self.rate < 0:
            raise DomainError(f"rate must be a nonnegative real, got {self.rate}")
        if not dist:
            raise DomainError("input_dist must not be empty")
        if min(dist) < 0 or abs(math.fsum(dist) - 1.0) > PROBABILITY_TOLERANCE:
            raise DomainError(f"input_dist must be a probability vector, got {dist}")

    @property
    def distribution(self) -> np.ndarray:
        return np.array(self.input_dist, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {'rate_nats': self.rate, 'input_dist': list(self.input_dist)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], units: RateUnit = RateUnit.NATS) -> 'CodeOption':
        if 'rate_nats' in data:
            rate = data['rate_nats']
        else:
            rate = units.to_nats(data.get('rate', 0.0))
        return cls(rate=rate, input_dist=tuple(data['input_dist']))


@dataclass(frozen=True, order=True)
class CodeIndexVector:
    """One option index per user plus the interferer option index

    Ordering is lexicographic on (option_indices, interferer_index), which is
    the enumeration order of ``enumerate_vectors``.
    """
    option_indices: Tuple[int, ...]
    interferer_index: int = 0

    def __post_init__(self):
        indices = tuple(int(i) for i in self.option_indices)
        object.__setattr__(self, 'option_indices', indices)
        object.__setattr__(self, 'interferer_index', int(self.interferer_index))
        if any(i < 0 for i in indices) or self.interferer_index < 0:
            raise IndexRangeError(f"negative index in code vector {indices}/{self.interferer_index}")

    @property
    def num_users(self) -> int:
        return len(self.option_indices)

    def option(self, user: int) -> int:
        """Option index of user ``user`` (1-based)"""
        return self.option_indices[user - 1]

    def restricted(self, users: Iterable[int]) -> Tuple[int, ...]:
        return tuple(self.option_indices[k - 1] for k in sorted(users))

    def agrees_on(self, other: 'CodeIndexVector', users: Iterable[int]) -> bool:
        """True when g_S equals other_S for the given user set S"""
        return all(self.option_indices[k - 1] == other.option_indices[k - 1] for k in users)

    def __str__(self) -> str:
        return ','.join(str(i) for i in self.option_indices) + f"/{self.interferer_index}"

    def to_dict(self) -> Dict[str, Any]:
        return {'options': list(self.option_indices), 'interferer': self.interferer_index}

    @classmethod
    def from_dict(cls, data: Any) -> 'CodeIndexVector':
        """Accept either {"options": [...], "interferer": i} or a bare index list"""
        if isinstance(data, Mapping):
            return cls(tuple(data['options']), data.get('interferer', 0))
        return cls(tuple(data), 0)

    @classmethod
    def parse(cls, text: str) -> 'CodeIndexVector':
        """Parse the text form ``i1,i2,...[/g0]``"""
        try:
            options, _, interferer = text.strip().partition('/')
            indices = tuple(int(part) for part in options.split(',') if part.strip())
            return cls(indices, int(interferer) if interferer else 0)
        except ValueError:
            raise DomainError(f"cannot parse code vector {text!r}; expected e.g. '0,1/0'") from None


@dataclass(frozen=True)
class CodeEnsembleVector:
    """Per-user option lists plus the interferer option labels"""
    per_user_options: Tuple[Tuple[CodeOption, ...], ...]
    interferer_options: Tuple[str, ...] = ('none',)

    def __post_init__(self):
        options = tuple(tuple(user) for user in self.per_user_options)
        object.__setattr__(self, 'per_user_options', options)
        object.__setattr__(self, 'interferer_options', tuple(str(x) for x in self.interferer_options))
        if not options:
            raise DomainError("ensemble needs at least one user")
        for k, user_options in enumerate(options, start=1):
            if not user_options:
                raise DomainError(f"user {k} has no code options")
        if not self.interferer_options:
            raise DomainError("ensemble needs at least one interferer option")

    @property
    def num_users(self) -> int:
        return len(self.per_user_options)

    @property
    def option_counts(self) -> Tuple[int, ...]:
        return tuple(len(user) for user in self.per_user_options)

    @property
    def num_interferer_options(self) -> int:
        return len(self.interferer_options)

    def check_vector(self, g: CodeIndexVector) -> None:
        if g.num_users != self.num_users:
            raise IndexRangeError(f"code vector {g} has {g.num_users} entries, ensemble has {self.num_users} users")
        for k, (index, count) in enumerate(zip(g.option_indices, self.option_counts), start=1):
            if index >= count:
                raise IndexRangeError(f"user {k} option {index} out of range ({count} option(s))")
        if g.interferer_index >= self.num_interferer_options:
            raise IndexRangeError(
                f"interferer index {g.interferer_index} out of range ({self.num_interferer_options} option(s))"
            )

    def option(self, g: CodeIndexVector, user: int) -> CodeOption:
        self.check_vector(g)
        return self.per_user_options[user - 1][g.option(user)]

    def rate(self, g: CodeIndexVector, user: int) -> float:
        return self.option(g, user).rate

    def rate_sum(self, g: CodeIndexVector, users: Iterable[int]) -> float:
        return math.fsum(self.rate(g, k) for k in users)

    def input_dists(self, g: CodeIndexVector) -> Dict[int, np.ndarray]:
        return {k: self.option(g, k).distribution for k in range(1, self.num_users + 1)}

    def channel_g0(self, channel: Any, g: CodeIndexVector) -> int:
        """Index into the channel's interferer family selected by g"""
        self.check_vector(g)
        label = self.interferer_options[g.interferer_index]
        if label in channel.interferer_options:
            return channel.interferer_index(label)
        if channel.num_interferer_options == 1 and self.num_interferer_options == 1:
            return 0
        raise IndexRangeError(f"interferer option {label!r} not offered by the channel")

    def check_against(self, channel: Any) -> None:
        """Dimension consistency with a channel"""
        if channel.num_users != self.num_users:
            raise DomainError(f"ensemble has {self.num_users} users, channel has K={channel.num_users}")
        for k, user_options in enumerate(self.per_user_options, start=1):
            size = channel.input_alphabet_sizes[k - 1]
            for j, option in enumerate(user_options):
                if len(option.input_dist) != size:
                    raise DomainError(
                        f"user {k} option {j}: input_dist has {len(option.input_dist)} entries, "
                        f"alphabet size is {size}"
                    )

    def with_rate(self, user: int, option: int, rate: float) -> 'CodeEnsembleVector':
        options = [list(u) for u in self.per_user_options]
        options[user - 1][option] = replace(options[user - 1][option], rate=rate)
        return replace(self, per_user_options=tuple(tuple(u) for u in options))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'users': [[option.to_dict() for option in user] for user in self.per_user_options],
            'interferer_options': list(self.interferer_options),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], channel: Optional[Any] = None,
                  units: RateUnit = RateUnit.NATS) -> 'CodeEnsembleVector':
        """Create an ensemble; interferer labels default to the channel's family"""
        from utils.validation import EnsembleValidator

        result = EnsembleValidator.validate_description(data, channel)
        if not result['valid']:
            raise DomainError("invalid ensemble: " + "; ".join(result['errors']))

        labels = data.get('interferer_options')
        if labels is None:
            labels = list(channel.interferer_options) if channel is not None else ['none']
        return cls(
            per_user_options=tuple(
                tuple(CodeOption.from_dict(option, units) for option in user)
                for user in data['users']
            ),
            interferer_options=tuple(labels),
        )

    def digest(self) -> str:
        return calculate_object_hash(self.to_dict())


class Zone(Enum):
    """Where a code vector sits relative to an operation configuration"""
    REGION = "region"
    MARGIN = "margin"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class OperationConfig:
    """Operation region R_D, margin and decode set D"""
    region: FrozenSet[CodeIndexVector]
    margin: FrozenSet[CodeIndexVector] = frozenset()
    decode_set: FrozenSet[int] = frozenset({1})

    def __post_init__(self):
        object.__setattr__(self, 'region', frozenset(self.region))
        object.__setattr__(self, 'margin', frozenset(self.margin))
        object.__setattr__(self, 'decode_set', frozenset(int(k) for k in self.decode_set))

        overlap = self.region & self.margin
        if overlap:
            raise DomainError(
                f"region and margin must be disjoint; shared: {sorted(str(g) for g in overlap)}"
            )
        if not self.decode_set or min(self.decode_set) < 1:
            raise DomainError("decode set must be a non-empty set of users numbered from 1")

    @property
    def decode_users(self) -> Tuple[int, ...]:
        return tuple(sorted(self.decode_set))

    def zone(self, g: CodeIndexVector) -> Zone:
        if g in self.region:
            return Zone.REGION
        if g in self.margin:
            return Zone.MARGIN
        return Zone.OUTSIDE

    def check_users(self, num_users: int) -> None:
        if max(self.decode_set) > num_users:
            raise IndexRangeError(f"decode set {sorted(self.decode_set)} exceeds K={num_users}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'region': [g.to_dict() for g in sorted(self.region)],
            'margin': [g.to_dict() for g in sorted(self.margin)],
            'decode_set': sorted(self.decode_set),
        }


@dataclass(frozen=True, eq=False)
class WeightAssignment:
    """Weights alpha_g (nats/symbol) with sum_g exp(-N alpha_g) = 1"""
    weights: Mapping[CodeIndexVector, float]
    blocklength: int
    tolerance: float = field(default=WEIGHT_TOLERANCE, repr=False)

    def __post_init__(self):
        weights = {g: float(a) for g, a in self.weights.items()}
        object.__setattr__(self, 'weights', weights)
        self.verify()

    def verify(self) -> None:
        """Re-check nonnegativity and the normalization constraint"""
        if not isinstance(self.blocklength, int) or self.blocklength < 1:
            raise WeightError(f"blocklength N must be a positive integer, got {self.blocklength}")
        if not self.weights:
            raise WeightError("weight assignment is empty")
        negative = [str(g) for g, a in self.weights.items() if not a >= 0]
        if negative:
            raise WeightError(f"weights must be nonnegative; offending vectors: {negative[:10]}")
        total = math.fsum(math.exp(-self.blocklength * a) for a in self.weights.values())
        if abs(total - 1.0) > self.tolerance:
            raise WeightError(f"sum of exp(-N*alpha) is {total:.12g}, expected 1")

    def alpha(self, g: CodeIndexVector) -> float:
        try:
            return self.weights[g]
        except KeyError:
            raise WeightError(f"no weight for code vector {g}") from None

    def factor(self, g: CodeIndexVector) -> float:
        """exp(-N alpha_g)"""
        return math.exp(-self.blocklength * self.alpha(g))

    def require(self, vectors: Iterable[CodeIndexVector]) -> None:
        missing = [str(g) for g in vectors if g not in self.weights]
        if missing:
            raise WeightError(f"weight missing for code vector(s): {missing[:10]}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'N': self.blocklength,
            'weights': [dict(g.to_dict(), alpha=a) for g, a in sorted(self.weights.items())],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'WeightAssignment':
        weights = {CodeIndexVector.from_dict(entry): entry['alpha'] for entry in data['weights']}
        return cls(weights=weights, blocklength=int(data['N']))


def vectors_from_list(data: Sequence[Any]) -> List[CodeIndexVector]:
    return [CodeIndexVector.from_dict(entry) for entry in data]
