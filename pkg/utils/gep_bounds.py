"""
Generalized error performance bounds

Assembles the (D, R_D)-decoder bound from the exponents module and minimizes
the single-user bound over partitions of the operation region into decode
sets. Exponents are memoized through an ExponentCache because the partition
search re-queries the same (g, g~, S) pairs many times.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Collection, Dict, FrozenSet, List, Optional, Sequence, Tuple

from config import Config
from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector, WeightAssignment
from models.report_models import (
    GepBoundReport,
    GepTerm,
    PartitionAssignment,
    PartitionBoundReport,
    VectorBreakdown,
)
from utils.code_space import enumerate_vectors, subsets_containing
from utils.exceptions import CapExceededError, DomainError, IndexRangeError, WeightError
from utils.exponents import ExponentCache, ExponentKind, ExponentOptimizer, ExponentQuery
from utils.helpers import format_subset, proper_subsets_of, subset_to_mask

logger = logging.getLogger(__name__)

EXHAUSTIVE_CAP = Config.EXHAUSTIVE_CAP
GREEDY_MAX_PASSES = Config.GREEDY_MAX_PASSES
STRATEGIES = ('exhaustive', 'greedy')


class GepBoundEvaluator:
    """Evaluates decoder bounds for one (channel, ensemble, weights, N) instance"""

    def __init__(self, channel: ChannelModel, ensemble: CodeEnsembleVector,
                 weights: WeightAssignment, blocklength: int,
                 optimizer: Optional[ExponentOptimizer] = None,
                 cache: Optional[ExponentCache] = None,
                 vectors: Optional[Sequence[CodeIndexVector]] = None,
                 threads: int = 1):
        if not isinstance(blocklength, int) or blocklength < 1:
            raise DomainError(f"blocklength N must be a positive integer, got {blocklength}")
        if weights.blocklength != blocklength:
            raise WeightError(
                f"weights were built for N={weights.blocklength}, bound requested at N={blocklength}"
            )
        ensemble.check_against(channel)

        self.channel = channel
        self.ensemble = ensemble
        self.weights = weights
        self.blocklength = blocklength
        self.optimizer = optimizer or ExponentOptimizer()
        self.cache = cache if cache is not None else ExponentCache()
        self.vectors = list(vectors) if vectors is not None else enumerate_vectors(ensemble)
        self.threads = max(1, int(threads))
        self.context = ExponentCache.context_key(channel, ensemble, self.optimizer)

        weights.require(self.vectors)

    def exponent(self, kind: ExponentKind, decode_set: FrozenSet[int], subset: FrozenSet[int],
                 g: CodeIndexVector, g_tilde: CodeIndexVector) -> float:
        query = ExponentQuery(
            channel=self.channel,
            ensemble=self.ensemble,
            decode_set=decode_set,
            subset=subset,
            g=g,
            g_tilde=g_tilde,
            alpha_g=self.weights.alpha(g),
            alpha_g_tilde=self.weights.alpha(g_tilde),
            kind=kind,
        )
        return self.cache.get_or_compute(self.context, query, self.optimizer).value

    def _term(self, kind: ExponentKind, decode_set: FrozenSet[int], subset: FrozenSet[int],
              g: CodeIndexVector, g_tilde: CodeIndexVector, multiplier: int) -> GepTerm:
        return GepTerm(
            other=g_tilde,
            subset=subset,
            kind=kind.value,
            multiplier=multiplier,
            exponent=self.exponent(kind, decode_set, subset, g, g_tilde),
        )

    def vector_breakdown(self, decode_set: FrozenSet[int], g: CodeIndexVector,
                         region: FrozenSet[CodeIndexVector],
                         margin: FrozenSet[CodeIndexVector]) -> VectorBreakdown:
        """The three sums of the D-decoder bound for one g in R_D"""
        message_terms: List[GepTerm] = []
        interference_terms: List[GepTerm] = []
        for subset in proper_subsets_of(decode_set):
            for g_tilde in self.vectors:
                if not g.agrees_on(g_tilde, subset):
                    continue
                if g_tilde in region:
                    message_terms.append(self._term(ExponentKind.MD, decode_set, subset, g, g_tilde, 1))
                else:
                    interference_terms.append(self._term(ExponentKind.ID_S, decode_set, subset, g, g_tilde, 2))

        misdetection_terms = [
            self._term(ExponentKind.ID_D, decode_set, decode_set, g, g_tilde, 2)
            for g_tilde in self.vectors
            if g_tilde not in region and g_tilde not in margin and g.agrees_on(g_tilde, decode_set)
        ]
        return VectorBreakdown(
            vector=g,
            message_terms=tuple(message_terms),
            interference_terms=tuple(interference_terms),
            misdetection_terms=tuple(misdetection_terms),
        )

    def bound_d(self, decode_set: Collection[int], region: Collection[CodeIndexVector],
                margin: Collection[CodeIndexVector] = ()) -> GepBoundReport:
        """Upper bound on GEP_D for the decoder (D, R_D) with margin"""
        decode_set = frozenset(decode_set)
        region = frozenset(region)
        margin = frozenset(margin)
        if not decode_set or not all(1 <= k <= self.channel.num_users for k in decode_set):
            raise IndexRangeError(
                f"decode set {format_subset(decode_set)} outside 1..{self.channel.num_users}"
            )
        overlap = region & margin
        if overlap:
            raise DomainError(f"region and margin must be disjoint; shared: {sorted(str(g) for g in overlap)}")
        for g in region | margin:
            self.ensemble.check_vector(g)

        ordered = sorted(region)
        if self.threads > 1 and len(ordered) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                breakdown = list(pool.map(
                    lambda g: self.vector_breakdown(decode_set, g, region, margin), ordered
                ))
        else:
            breakdown = [self.vector_breakdown(decode_set, g, region, margin) for g in ordered]

        report = GepBoundReport(decode_set=decode_set, blocklength=self.blocklength,
                                breakdown=tuple(breakdown))
        logger.debug(
            f"GEP_D bound for D={format_subset(decode_set)}, |R_D|={len(region)}, "
            f"|margin|={len(margin)}: {report.total:.6g}"
        )
        return report


def gep_bound_d(channel: ChannelModel, ensemble: CodeEnsembleVector,
                decode_set: Collection[int], region: Collection[CodeIndexVector],
                margin: Collection[CodeIndexVector], weights: WeightAssignment,
                blocklength: int, optimizer: Optional[ExponentOptimizer] = None,
                cache: Optional[ExponentCache] = None, threads: int = 1) -> GepBoundReport:
    """Bound on GEP_D for one (D, R_D) decoder with margin

    Raises WeightError when some enumerated vector carries no weight.
    """
    evaluator = GepBoundEvaluator(channel, ensemble, weights, blocklength,
                                  optimizer=optimizer, cache=cache, threads=threads)
    return evaluator.bound_d(decode_set, region, margin)


class _PartitionSearch:
    """Memoized evaluation of sum_D GEP_D for assignments of one region"""

    def __init__(self, evaluator: GepBoundEvaluator, region: FrozenSet[CodeIndexVector],
                 margin: FrozenSet[CodeIndexVector]):
        self.evaluator = evaluator
        self.region = region
        self.margin = margin
        self._reports: Dict[Tuple[FrozenSet[int], FrozenSet[CodeIndexVector]], GepBoundReport] = {}
        self.evaluated = 0

    def reports(self, assignment: PartitionAssignment) -> Tuple[GepBoundReport, ...]:
        regions = assignment.regions()
        reports = []
        for decode_set in sorted(regions, key=subset_to_mask):
            region_d = regions[decode_set]
            key = (decode_set, region_d)
            report = self._reports.get(key)
            if report is None:
                margin_d = assignment.margin_for(decode_set, self.region, self.margin)
                report = self.evaluator.bound_d(decode_set, region_d, margin_d)
                self._reports[key] = report
            reports.append(report)
        return tuple(reports)

    def total(self, assignment: PartitionAssignment) -> float:
        self.evaluated += 1
        return math.fsum(r.total for r in self.reports(assignment))


def gep_bound_partition(evaluator: GepBoundEvaluator, assignment: PartitionAssignment,
                        region: Collection[CodeIndexVector],
                        margin: Collection[CodeIndexVector] = ()) -> PartitionBoundReport:
    """sum_D GEP_D for one given partition of the operation region"""
    region = frozenset(region)
    margin = frozenset(margin)
    if set(assignment.mapping) != set(region):
        raise DomainError("partition assignment must cover the operation region exactly")
    search = _PartitionSearch(evaluator, region, margin)
    return PartitionBoundReport(
        assignment=assignment,
        reports=search.reports(assignment),
        strategy='given',
        assignments_evaluated=1,
    )


def _exhaustive(search: _PartitionSearch, ordered: List[CodeIndexVector],
                choices: List[FrozenSet[int]], cap: int) -> PartitionAssignment:
    count = len(choices) ** len(ordered)
    if count > cap:
        raise CapExceededError("exhaustive partition assignments", count, cap)
    logger.info(f"Exhaustive partition search over {count} assignment(s)")

    best, best_total = None, math.inf
    for combo in itertools.product(choices, repeat=len(ordered)):
        assignment = PartitionAssignment(dict(zip(ordered, combo)))
        total = search.total(assignment)
        if total < best_total:
            best, best_total = assignment, total
    return best


def _greedy(search: _PartitionSearch, ordered: List[CodeIndexVector],
            choices: List[FrozenSet[int]], num_users: int, max_passes: int) -> PartitionAssignment:
    mapping = {g: frozenset(range(1, num_users + 1)) for g in ordered}
    current = search.total(PartitionAssignment(mapping))

    for pass_number in range(1, max_passes + 1):
        changed = False
        for g in ordered:
            for decode_set in choices:
                if decode_set == mapping[g]:
                    continue
                trial = dict(mapping)
                trial[g] = decode_set
                total = search.total(PartitionAssignment(trial))
                if total < current:
                    mapping, current, changed = trial, total, True
        logger.debug(f"Greedy pass {pass_number}: bound {current:.6g}")
        if not changed:
            break
    return PartitionAssignment(mapping)


def gep_bound_single_user(channel: ChannelModel, ensemble: CodeEnsembleVector,
                          region: Collection[CodeIndexVector], margin: Collection[CodeIndexVector],
                          weights: WeightAssignment, blocklength: int,
                          strategy: str = 'exhaustive', cap: int = EXHAUSTIVE_CAP,
                          optimizer: Optional[ExponentOptimizer] = None,
                          cache: Optional[ExponentCache] = None,
                          max_passes: int = GREEDY_MAX_PASSES,
                          threads: int = 1) -> PartitionBoundReport:
    """Single-user bound minimized over partitions of R_1 into decode sets containing user 1"""
    if strategy not in STRATEGIES:
        raise DomainError(f"unknown partition strategy {strategy!r}; choose from {STRATEGIES}")
    region = frozenset(region)
    margin = frozenset(margin)
    if region & margin:
        raise DomainError("operation region and margin must be disjoint")

    evaluator = GepBoundEvaluator(channel, ensemble, weights, blocklength,
                                  optimizer=optimizer, cache=cache, threads=threads)
    search = _PartitionSearch(evaluator, region, margin)
    ordered = sorted(region)
    if not ordered:
        return PartitionBoundReport(PartitionAssignment({}), (), strategy, 1)

    choices = subsets_containing(channel.num_users, {1})
    if strategy == 'exhaustive':
        assignment = _exhaustive(search, ordered, choices, cap)
    else:
        assignment = _greedy(search, ordered, choices, channel.num_users, max_passes)

    report = PartitionBoundReport(
        assignment=assignment,
        reports=search.reports(assignment),
        strategy=strategy,
        assignments_evaluated=search.evaluated,
    )
    logger.info(
        f"Single-user bound ({strategy}): {report.total:.6g} after "
        f"{search.evaluated} assignment evaluation(s)"
    )
    return report


def gep_bound_sweep(channel: ChannelModel, ensemble: CodeEnsembleVector,
                    region: Collection[CodeIndexVector], margin: Collection[CodeIndexVector],
                    blocklengths: Sequence[int],
                    weights_for: Callable[[int], WeightAssignment],
                    decode_set: Optional[Collection[int]] = None,
                    strategy: str = 'greedy',
                    optimizer: Optional[ExponentOptimizer] = None,
                    cache: Optional[ExponentCache] = None) -> List[Dict[str, float]]:
    """Bound-vs-N rows for CSV emission

    ``weights_for(N)`` supplies the weights at each blocklength. With a
    decode set the D-decoder bound is swept, otherwise the partition bound.
    """
    cache = cache if cache is not None else ExponentCache()
    rows = []
    for n in blocklengths:
        weights = weights_for(n)
        if decode_set is not None:
            total = gep_bound_d(channel, ensemble, decode_set, region, margin, weights, n,
                                optimizer=optimizer, cache=cache).total
        else:
            total = gep_bound_single_user(channel, ensemble, region, margin, weights, n,
                                          strategy=strategy, optimizer=optimizer, cache=cache).total
        rows.append({'N': n, 'bound': total})
    return rows
