"""
Code-space operations

Enumeration of code index vectors, uniform weight construction and the
user-subset quantifier enumeration used by the region predicates and bounds.
"""

import itertools
import logging
import math
from typing import Collection, FrozenSet, Iterable, List

from config import Config
from models.code_models import CodeEnsembleVector, CodeIndexVector, WeightAssignment
from utils.exceptions import CapExceededError, DomainError, IndexRangeError
from utils.helpers import mask_to_subset, subset_to_mask

logger = logging.getLogger(__name__)

MAX_USERS = Config.MAX_USERS
VECTOR_CAP = Config.VECTOR_CAP


def uniform_weights(vectors: Collection[CodeIndexVector], blocklength: int) -> WeightAssignment:
    """alpha_g = log(|set|) / N for every vector in the set"""
    vectors = set(vectors)
    if not vectors:
        raise DomainError("uniform weights need a non-empty vector set")
    if not isinstance(blocklength, int) or blocklength < 1:
        raise DomainError(f"blocklength N must be a positive integer, got {blocklength}")
    alpha = math.log(len(vectors)) / blocklength
    return WeightAssignment({g: alpha for g in vectors}, blocklength)


def enumerate_vectors(ensemble: CodeEnsembleVector, cap: int = VECTOR_CAP) -> List[CodeIndexVector]:
    """Every code index vector of the ensemble

    Order is lexicographic: user 1's option varies slowest and the interferer
    option fastest.
    """
    counts = list(ensemble.option_counts) + [ensemble.num_interferer_options]
    total = 1
    for count in counts:
        total *= count
        if total > cap:
            raise CapExceededError("code vector enumeration (partial product)", total, cap)

    vectors = [
        CodeIndexVector(tuple(combo[:-1]), combo[-1])
        for combo in itertools.product(*(range(c) for c in counts))
    ]
    logger.debug(f"Enumerated {len(vectors)} code vectors for option counts {counts}")
    return vectors


def subsets_containing(num_users: int, anchor: Iterable[int]) -> List[FrozenSet[int]]:
    """All S of {1..K} with anchor contained in S, in ascending bitmask order"""
    if not 1 <= num_users <= MAX_USERS:
        raise DomainError(f"number of users must be between 1 and {MAX_USERS}, got {num_users}")
    anchor = frozenset(anchor)
    if any(not 1 <= k <= num_users for k in anchor):
        raise IndexRangeError(f"anchor {sorted(anchor)} is not a subset of 1..{num_users}")
    anchor_mask = subset_to_mask(anchor)
    return [
        mask_to_subset(mask)
        for mask in range(1 << num_users)
        if mask & anchor_mask == anchor_mask
    ]
