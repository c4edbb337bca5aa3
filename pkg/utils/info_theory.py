"""
Mutual information and capacity-region membership

Builds the joint input/output tensor for a code index vector and evaluates
conditional mutual informations I(X_A; Y | X_C) by marginalization. Users
outside A and C are averaged out, i.e. treated as interference.

Region predicates:
  * ``in_cd_user``     - per-user distributed region (strict inequalities)
  * ``in_cd_subset``   - user-subset region, checked two independent ways
  * ``in_cd_all``      - all users decoded
  * ``shannon_polymatroid_check`` - fixed-distribution Shannon region (closure)
  * ``gaussian_region_check``     - closed-form Gaussian MAC region (closure)

All quantities are in nats. The empty set S is never quantified.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import entr

from config import Config
from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector
from models.report_models import CandidateInequality, RegionVerdict, SubsetWitness
from utils.code_space import subsets_containing
from utils.exceptions import DomainError, IndexRangeError
from utils.helpers import format_subset, subsets_of

logger = logging.getLogger(__name__)

JOINT_TOLERANCE = Config.JOINT_TOLERANCE
NEGATIVE_MI_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """P(x_1..x_K, y) = P(y|x, g0) * prod_k P_k(x_k) as a dense tensor

    Axis k-1 belongs to user k; the last axis is Y.
    """
    probabilities: np.ndarray = field(repr=False)
    g0: int
    input_dists: Tuple[Tuple[float, ...], ...]

    @property
    def num_users(self) -> int:
        return self.probabilities.ndim - 1


def build_joint_from_dists(channel: ChannelModel, g0: int,
                           input_dists: Sequence[Sequence[float]]) -> JointDistribution:
    if len(input_dists) != channel.num_users:
        raise DomainError(f"need {channel.num_users} input distributions, got {len(input_dists)}")
    if not 0 <= g0 < channel.num_interferer_options:
        raise IndexRangeError(f"g0={g0} out of range")

    tensor = np.array(channel.transition[g0], dtype=float)
    for k, dist in enumerate(input_dists, start=1):
        dist = np.asarray(dist, dtype=float)
        if dist.shape != (channel.input_alphabet_sizes[k - 1],):
            raise DomainError(
                f"user {k}: input distribution has shape {dist.shape}, "
                f"alphabet size is {channel.input_alphabet_sizes[k - 1]}"
            )
        shape = [1] * tensor.ndim
        shape[k - 1] = dist.size
        tensor = tensor * dist.reshape(shape)

    total = tensor.sum()
    if abs(total - 1.0) > JOINT_TOLERANCE:
        raise DomainError(f"joint distribution sums to {total:.12g}")
    tensor.setflags(write=False)
    return JointDistribution(
        probabilities=tensor,
        g0=g0,
        input_dists=tuple(tuple(float(p) for p in d) for d in input_dists),
    )


def build_joint(channel: ChannelModel, g: CodeIndexVector,
                ensemble: CodeEnsembleVector) -> JointDistribution:
    """Joint tensor for code vector g (its interferer option selects the channel law)"""
    ensemble.check_against(channel)
    ensemble.check_vector(g)
    dists = ensemble.input_dists(g)
    return build_joint_from_dists(
        channel, ensemble.channel_g0(channel, g),
        [dists[k] for k in range(1, channel.num_users + 1)],
    )


def _entropy(p: np.ndarray) -> float:
    return float(entr(p).sum())


def conditional_mi(joint: JointDistribution, a_users: Iterable[int],
                   c_users: Iterable[int] = ()) -> float:
    """I(X_A; Y | X_C) in nats

    Computed as H(X_A,X_C) + H(X_C,Y) - H(X_A,X_C,Y) - H(X_C) on the
    marginal over A, C and Y.
    """
    a_users, c_users = frozenset(a_users), frozenset(c_users)
    if a_users & c_users:
        raise DomainError(
            f"A={format_subset(a_users)} and C={format_subset(c_users)} must be disjoint"
        )
    num_users = joint.num_users
    if any(not 1 <= k <= num_users for k in a_users | c_users):
        raise IndexRangeError(f"user index outside 1..{num_users}")
    if not a_users:
        return 0.0

    p = joint.probabilities
    y_axis = num_users
    others = tuple(k - 1 for k in range(1, num_users + 1) if k not in a_users | c_users)
    a_axes = tuple(k - 1 for k in a_users)

    p_acy = p.sum(axis=others, keepdims=True)
    p_ac = p_acy.sum(axis=y_axis, keepdims=True)
    p_cy = p_acy.sum(axis=a_axes, keepdims=True)
    p_c = p_ac.sum(axis=a_axes, keepdims=True)

    value = _entropy(p_ac) + _entropy(p_cy) - _entropy(p_acy) - _entropy(p_c)
    if value < -NEGATIVE_MI_TOLERANCE:
        logger.warning(f"Mutual information evaluated to {value:.3e}; clamping to 0")
    return max(0.0, value)


def mutual_information_table(joint: JointDistribution) -> Dict[FrozenSet[int], float]:
    """I(X_S; Y | X_Sbar) for every non-empty S"""
    users = frozenset(range(1, joint.num_users + 1))
    return {
        s: conditional_mi(joint, s, users - s)
        for s in subsets_of(users) if s
    }


class _RegionContext:
    """Joint tensor, rates and an MI memo for one code vector"""

    def __init__(self, channel: ChannelModel, ensemble: CodeEnsembleVector,
                 g: CodeIndexVector, slack: float):
        if slack < 0 or not math.isfinite(slack):
            raise DomainError(f"slack must be a nonnegative real, got {slack}")
        self.joint = build_joint(channel, g, ensemble)
        self.ensemble = ensemble
        self.g = g
        self.slack = slack
        self.users = frozenset(range(1, channel.num_users + 1))
        self._mi: Dict[Tuple[FrozenSet[int], FrozenSet[int]], float] = {}

    def information(self, a_users: FrozenSet[int], c_users: FrozenSet[int]) -> float:
        key = (a_users, c_users)
        if key not in self._mi:
            self._mi[key] = conditional_mi(self.joint, a_users, c_users)
        return self._mi[key]

    def inequality(self, subset_tilde: FrozenSet[int], subset: FrozenSet[int]) -> CandidateInequality:
        """Strict test of sum_{S~} r + slack < I(X_S~; Y | X_{complement of S})"""
        rate_sum = self.ensemble.rate_sum(self.g, sorted(subset_tilde))
        information = self.information(subset_tilde, self.users - subset)
        return CandidateInequality(
            subset=subset_tilde,
            rate_sum=rate_sum,
            information=information,
            satisfied=rate_sum + self.slack < information,
        )

    def witness(self, subset: FrozenSet[int], candidates: List[FrozenSet[int]]) -> SubsetWitness:
        checked = tuple(self.inequality(s_tilde, subset) for s_tilde in candidates)
        satisfied_by = next((c.subset for c in checked if c.satisfied), None)
        return SubsetWitness(subset=subset, satisfied_by=satisfied_by, candidates=checked)


def _user_verdict(context: _RegionContext, user: int) -> RegionVerdict:
    witnesses = []
    for subset in subsets_containing(len(context.users), {user}):
        candidates = [s for s in subsets_of(subset) if user in s]
        witnesses.append(context.witness(subset, candidates))
    return RegionVerdict(
        member=all(w.satisfied for w in witnesses),
        predicate=f"user:{user}",
        witness=tuple(witnesses),
        slack=context.slack,
    )


def in_cd_user(channel: ChannelModel, ensemble: CodeEnsembleVector,
               g: CodeIndexVector, user: int, slack: float = 0.0) -> RegionVerdict:
    """Membership of g in user ``user``'s distributed capacity region

    For every S containing the user there must be an S~ with
    user in S~ subset of S and sum_{S~} r < I(X_S~; Y | X_Sbar).
    """
    if not 1 <= user <= channel.num_users:
        raise IndexRangeError(f"user {user} outside 1..{channel.num_users}")
    return _user_verdict(_RegionContext(channel, ensemble, g, slack), user)


def in_cd_subset(channel: ChannelModel, ensemble: CodeEnsembleVector,
                 g: CodeIndexVector, users: Iterable[int], slack: float = 0.0) -> RegionVerdict:
    """Membership of g in the region of a user subset S0

    The direct formula quantifies every S meeting S0 with S~ between
    S intersect S0 and S; the result is cross-checked against the
    intersection of the per-user regions.
    """
    anchor = frozenset(users)
    if not anchor:
        raise DomainError("user subset S0 must be non-empty")
    if any(not 1 <= k <= channel.num_users for k in anchor):
        raise IndexRangeError(f"S0={format_subset(anchor)} outside 1..{channel.num_users}")

    context = _RegionContext(channel, ensemble, g, slack)
    witnesses = []
    for subset in subsets_of(context.users):
        core = subset & anchor
        if not core:
            continue
        candidates = [s for s in subsets_of(subset) if core <= s]
        witnesses.append(context.witness(subset, candidates))
    direct = all(w.satisfied for w in witnesses)

    intersection = all(_user_verdict(context, k).member for k in sorted(anchor))
    if direct != intersection:
        logger.warning(
            f"Subset region check for S0={format_subset(anchor)} at g={g} disagrees with "
            f"the per-user intersection ({direct} vs {intersection})"
        )
    return RegionVerdict(
        member=direct,
        predicate=f"subset:{format_subset(anchor)}",
        witness=tuple(witnesses),
        slack=slack,
        cross_check=direct == intersection,
    )


def in_cd_all(channel: ChannelModel, ensemble: CodeEnsembleVector,
              g: CodeIndexVector, slack: float = 0.0) -> RegionVerdict:
    """All users decodable: sum_S r < I(X_S; Y | X_Sbar) for every non-empty S"""
    context = _RegionContext(channel, ensemble, g, slack)
    witnesses = [context.witness(s, [s]) for s in subsets_of(context.users) if s]
    return RegionVerdict(
        member=all(w.satisfied for w in witnesses),
        predicate='all',
        witness=tuple(witnesses),
        slack=slack,
    )


def _closure_verdict(predicate: str, rates: Sequence[float],
                     information: Dict[FrozenSet[int], float]) -> RegionVerdict:
    witnesses = []
    for subset in sorted(information, key=lambda s: sum(1 << (k - 1) for k in s)):
        rate_sum = math.fsum(rates[k - 1] for k in subset)
        inequality = CandidateInequality(
            subset=subset,
            rate_sum=rate_sum,
            information=information[subset],
            satisfied=rate_sum <= information[subset],
        )
        witnesses.append(SubsetWitness(
            subset=subset,
            satisfied_by=subset if inequality.satisfied else None,
            candidates=(inequality,),
        ))
    return RegionVerdict(
        member=all(w.satisfied for w in witnesses),
        predicate=predicate,
        witness=tuple(witnesses),
    )


def _check_rates(rates: Sequence[float], num_users: int) -> List[float]:
    rates = [float(r) for r in rates]
    if len(rates) != num_users:
        raise DomainError(f"need {num_users} rates, got {len(rates)}")
    if any(not math.isfinite(r) or r < 0 for r in rates):
        raise DomainError(f"rates must be nonnegative reals, got {rates}")
    return rates


def shannon_polymatroid_check(channel: ChannelModel, input_dists: Sequence[Sequence[float]],
                              rates: Sequence[float], g0: int = 0) -> RegionVerdict:
    """Fixed-distribution Shannon region: sum_S r <= I(X_S; Y | X_Sbar) for all S"""
    rates = _check_rates(rates, channel.num_users)
    joint = build_joint_from_dists(channel, g0, input_dists)
    return _closure_verdict('shannon', rates, mutual_information_table(joint))


def gaussian_region_check(powers: Sequence[float], noise: float,
                          rates: Sequence[float]) -> RegionVerdict:
    """Gaussian MAC: sum_S r <= 1/2 log(1 + sum_S P / N0) for all S"""
    powers = [float(p) for p in powers]
    if not powers:
        raise DomainError("need at least one transmit power")
    if any(not math.isfinite(p) or p < 0 for p in powers):
        raise DomainError(f"powers must be nonnegative, got {powers}")
    if not noise > 0:
        raise DomainError(f"noise power N0 must be positive, got {noise}")
    rates = _check_rates(rates, len(powers))

    users = frozenset(range(1, len(powers) + 1))
    information = {
        s: 0.5 * math.log1p(math.fsum(powers[k - 1] for k in s) / noise)
        for s in subsets_of(users) if s
    }
    return _closure_verdict('gaussian', rates, information)
