"""
Channel data models

This module defines the discrete memoryless multiple-access channel, including
the family of channel laws selected by an interfering user's option g0.
A channel without an interfering user is the length-1 family.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from utils.exceptions import DomainError, IndexRangeError
from utils.helpers import calculate_object_hash
from utils.validation import ChannelValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Dense transition tensor P(y | x_1..x_K, g0)

    ``transition`` has shape ``(G0, |X_1|, ..., |X_K|, |Y|)``. Rows are
    addressed in row-major (g0, x_1, ..., x_K) order, x_K varying fastest.
    """
    num_users: int
    input_alphabet_sizes: Tuple[int, ...]
    output_alphabet_size: int
    interferer_options: Tuple[str, ...]
    transition: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.input_alphabet_sizes)
        labels = tuple(str(label) for label in self.interferer_options)
        object.__setattr__(self, 'input_alphabet_sizes', sizes)
        object.__setattr__(self, 'interferer_options', labels)

        if not isinstance(self.num_users, int) or self.num_users < 1:
            raise DomainError("num_users must be a positive integer")
        if len(sizes) != self.num_users or any(s < 1 for s in sizes):
            raise DomainError("input_alphabet_sizes must hold one positive size per user")
        if self.output_alphabet_size < 1:
            raise DomainError("output_alphabet_size must be positive")
        if not labels:
            raise DomainError("interferer_options needs at least one label")
        if len(set(labels)) != len(labels):
            raise DomainError("interferer option labels must be unique")

        tensor = np.array(self.transition, dtype=float)
        expected = (len(labels),) + sizes + (self.output_alphabet_size,)
        if tensor.shape != expected:
            raise DomainError(
                f"dense tensor required: transition shape {tensor.shape}, expected {expected}"
            )
        tensor.setflags(write=False)
        object.__setattr__(self, 'transition', tensor)

    @property
    def num_interferer_options(self) -> int:
        return len(self.interferer_options)

    @property
    def num_rows(self) -> int:
        return int(np.prod(self.transition.shape[:-1]))

    def interferer_index(self, label: str) -> int:
        try:
            return self.interferer_options.index(str(label))
        except ValueError:
            raise IndexRangeError(f"unknown interferer option {label!r}") from None

    def _check_indices(self, g0: int, x: Sequence[int]) -> Tuple[int, ...]:
        if not 0 <= g0 < self.num_interferer_options:
            raise IndexRangeError(
                f"g0={g0} out of range for {self.num_interferer_options} interferer option(s)"
            )
        x = tuple(int(v) for v in np.atleast_1d(x))
        if len(x) != self.num_users:
            raise IndexRangeError(f"input vector has {len(x)} entries, expected {self.num_users}")
        for k, (value, size) in enumerate(zip(x, self.input_alphabet_sizes), start=1):
            if not 0 <= value < size:
                raise IndexRangeError(f"x_{k}={value} out of range for alphabet size {size}")
        return x

    def row(self, g0: int, x: Sequence[int]) -> np.ndarray:
        """Probability vector over Y for one (g0, x)"""
        return self.transition[(g0,) + self._check_indices(g0, x)]

    def emission_prob(self, g0: int, x: Sequence[int], y: int) -> float:
        """P(y | x, g0)"""
        row = self.row(g0, x)
        if not 0 <= y < self.output_alphabet_size:
            raise IndexRangeError(f"y={y} out of range for output alphabet size {self.output_alphabet_size}")
        return float(row[y])

    def sample_output(self, g0: int, x: Sequence[int], rng: np.random.Generator) -> int:
        """Draw y ~ P(. | x, g0) using one uniform from ``rng``"""
        cumulative = np.cumsum(self.row(g0, x))
        y = int(np.searchsorted(cumulative, rng.random(), side='right'))
        return min(y, self.output_alphabet_size - 1)

    def sample_outputs(self, g0: int, x_block: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw a block of outputs for inputs ``x_block`` of shape (K, N)

        Consumes one uniform per symbol, so the result equals N successive
        ``sample_output`` calls on the same generator.
        """
        x_block = np.asarray(x_block, dtype=int)
        if x_block.ndim != 2 or x_block.shape[0] != self.num_users:
            raise DomainError(f"x_block must have shape (K, N), got {x_block.shape}")
        if not 0 <= g0 < self.num_interferer_options:
            raise IndexRangeError(f"g0={g0} out of range")
        rows = self.transition[g0][tuple(x_block)]
        cumulative = np.cumsum(rows, axis=-1)
        uniforms = rng.random(x_block.shape[1])
        y = (cumulative <= uniforms[:, None]).sum(axis=-1)
        return np.minimum(y, self.output_alphabet_size - 1)

    def marginalize(self, g0: int, keep: Sequence[int],
                    input_dists: Dict[int, np.ndarray]) -> np.ndarray:
        """P(Y | X_keep, g0) with every other user averaged over its input distribution

        Returns a tensor with one axis per kept user (ascending user order)
        followed by the Y axis.
        """
        if not 0 <= g0 < self.num_interferer_options:
            raise IndexRangeError(f"g0={g0} out of range")
        keep = set(keep)
        tensor = self.transition[g0]
        for user in range(self.num_users, 0, -1):
            if user in keep:
                continue
            dist = np.asarray(input_dists[user], dtype=float)
            tensor = np.tensordot(tensor, dist, axes=([user - 1], [0]))
        return tensor

    def iter_rows(self) -> Iterator[Tuple[int, Tuple[int, ...], np.ndarray]]:
        """Yield (g0, x, row) in the documented row-major order"""
        for g0 in range(self.num_interferer_options):
            for x in np.ndindex(*self.input_alphabet_sizes):
                yield g0, tuple(int(v) for v in x), self.transition[(g0,) + x]

    def to_dict(self) -> Dict[str, Any]:
        """Convert channel to its JSON description"""
        return {
            'K': self.num_users,
            'input_alphabets': list(self.input_alphabet_sizes),
            'output_alphabet': self.output_alphabet_size,
            'interferer_options': list(self.interferer_options),
            'transition': [[float(p) for p in row] for _, _, row in self.iter_rows()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ChannelModel':
        """Create ChannelModel from its JSON description, rejecting invalid ones"""
        result = ChannelValidator.validate_description(data)
        if not result['valid']:
            raise DomainError("invalid channel: " + "; ".join(result['errors']))

        sizes = tuple(data['input_alphabets'])
        labels = tuple(data.get('interferer_options') or ['none'])
        shape = (len(labels),) + sizes + (data['output_alphabet'],)
        tensor = np.array(data['transition'], dtype=float).reshape(shape)
        return cls(
            num_users=data['K'],
            input_alphabet_sizes=sizes,
            output_alphabet_size=data['output_alphabet'],
            interferer_options=labels,
            transition=tensor,
        )

    def digest(self) -> str:
        return calculate_object_hash(self.to_dict())


def binary_symmetric_family(crossovers: Sequence[float],
                            labels: Sequence[str] = ()) -> ChannelModel:
    """Single-user binary symmetric channels, one per interferer option"""
    labels = list(labels) or (['none'] if len(crossovers) == 1
                              else [f"p={p:g}" for p in crossovers])
    rows: List[List[float]] = []
    for p in crossovers:
        rows.extend([[1.0 - p, p], [p, 1.0 - p]])
    return ChannelModel.from_dict({
        'K': 1,
        'input_alphabets': [2],
        'output_alphabet': 2,
        'interferer_options': labels,
        'transition': rows,
    })
