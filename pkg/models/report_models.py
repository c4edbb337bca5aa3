"""
Result data models

Value objects returned by the region predicates, the exponent optimizer,
the GEP bounds and the simulator, each convertible to the JSON emitted by the
CLI.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from models.code_models import CodeIndexVector
from utils.exceptions import DomainError
from utils.helpers import format_subset


@dataclass(frozen=True)
class CandidateInequality:
    """One inequality sum_{k in S~} r_k < I(X_S~; Y | X_Sbar) (plus slack)"""
    subset: FrozenSet[int]
    rate_sum: float
    information: float
    satisfied: bool

    @property
    def margin(self) -> float:
        return self.information - self.rate_sum

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subset': format_subset(self.subset),
            'rate_sum': self.rate_sum,
            'information': self.information,
            'margin': self.margin,
            'satisfied': self.satisfied,
        }


@dataclass(frozen=True)
class SubsetWitness:
    """Outcome for one quantified subset S"""
    subset: FrozenSet[int]
    satisfied_by: Optional[FrozenSet[int]]
    candidates: Tuple[CandidateInequality, ...]

    @property
    def satisfied(self) -> bool:
        return self.satisfied_by is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subset': format_subset(self.subset),
            'satisfied_by': None if self.satisfied_by is None else format_subset(self.satisfied_by),
            'candidates': [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class RegionVerdict:
    """Membership decision with per-subset witnesses"""
    member: bool
    predicate: str
    witness: Tuple[SubsetWitness, ...]
    slack: float = 0.0
    cross_check: Optional[bool] = None

    def __post_init__(self):
        if self.member != all(w.satisfied for w in self.witness):
            raise DomainError("verdict membership disagrees with its witnesses")

    @property
    def violated(self) -> List[FrozenSet[int]]:
        return [w.subset for w in self.witness if not w.satisfied]

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'member': self.member,
            'predicate': self.predicate,
            'slack': self.slack,
            'witness': [w.to_dict() for w in self.witness],
            'violated_subsets': [format_subset(s) for s in self.violated],
        }
        if self.cross_check is not None:
            data['cross_check'] = self.cross_check
        return data


@dataclass(frozen=True)
class ExponentReport:
    """Maximized exponent with its maximizer and optimizer diagnostics"""
    kind: str
    value: float
    arg_rho: Optional[float]
    arg_s: float
    evaluations: int
    refinement_iterations: int
    at_rho_floor: bool = False

    def bound_term(self, blocklength: int) -> float:
        """exp(-N E)"""
        return math.exp(-blocklength * self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'value': self.value,
            'arg_rho': self.arg_rho,
            'arg_s': self.arg_s,
            'evaluations': self.evaluations,
            'refinement_iterations': self.refinement_iterations,
            'at_rho_floor': self.at_rho_floor,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExponentReport':
        return cls(
            kind=data['kind'],
            value=data['value'],
            arg_rho=data.get('arg_rho'),
            arg_s=data['arg_s'],
            evaluations=data.get('evaluations', 0),
            refinement_iterations=data.get('refinement_iterations', 0),
            at_rho_floor=data.get('at_rho_floor', False),
        )


@dataclass(frozen=True)
class GepTerm:
    """One (g~, S) contribution to the bound for a fixed g"""
    other: CodeIndexVector
    subset: FrozenSet[int]
    kind: str
    multiplier: int
    exponent: float

    def contribution(self, blocklength: int) -> float:
        return self.multiplier * math.exp(-blocklength * self.exponent)

    def to_dict(self, blocklength: int) -> Dict[str, Any]:
        return {
            'g_tilde': str(self.other),
            'S': format_subset(self.subset),
            'kind': self.kind,
            'multiplier': self.multiplier,
            'exponent': self.exponent,
            'contribution': self.contribution(blocklength),
        }


@dataclass(frozen=True)
class VectorBreakdown:
    """The three sums of the D-decoder bound for one g in R_D"""
    vector: CodeIndexVector
    message_terms: Tuple[GepTerm, ...]
    interference_terms: Tuple[GepTerm, ...]
    misdetection_terms: Tuple[GepTerm, ...]

    def sums(self, blocklength: int) -> Tuple[float, float, float]:
        return tuple(
            math.fsum(t.contribution(blocklength) for t in terms)
            for terms in (self.message_terms, self.interference_terms, self.misdetection_terms)
        )

    def total(self, blocklength: int) -> float:
        return math.fsum(self.sums(blocklength))

    def to_dict(self, blocklength: int) -> Dict[str, Any]:
        message, interference, misdetection = self.sums(blocklength)
        return {
            'g': str(self.vector),
            'message_sum': message,
            'interference_sum': interference,
            'misdetection_sum': misdetection,
            'total': message + interference + misdetection,
            'terms': [t.to_dict(blocklength) for t in
                      self.message_terms + self.interference_terms + self.misdetection_terms],
        }


@dataclass(frozen=True)
class GepBoundReport:
    """Upper bound on GEP_D for one (D, R_D, margin) decoder"""
    decode_set: FrozenSet[int]
    blocklength: int
    breakdown: Tuple[VectorBreakdown, ...]

    @property
    def total(self) -> float:
        return math.fsum(b.total(self.blocklength) for b in self.breakdown)

    def per_vector(self) -> Dict[CodeIndexVector, float]:
        return {b.vector: b.total(self.blocklength) for b in self.breakdown}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'D': format_subset(self.decode_set),
            'N': self.blocklength,
            'total': self.total,
            'per_g': [b.to_dict(self.blocklength) for b in self.breakdown],
        }


@dataclass(frozen=True)
class PartitionAssignment:
    """Assignment sigma of each region vector to a decode set containing user 1"""
    mapping: Mapping[CodeIndexVector, FrozenSet[int]]

    def __post_init__(self):
        mapping = {g: frozenset(d) for g, d in self.mapping.items()}
        object.__setattr__(self, 'mapping', mapping)
        for g, d in mapping.items():
            if 1 not in d:
                raise DomainError(f"decode set {format_subset(d)} for {g} must contain user 1")

    def regions(self) -> Dict[FrozenSet[int], FrozenSet[CodeIndexVector]]:
        """Preimages R_D of the assignment (only non-empty ones)"""
        regions: Dict[FrozenSet[int], set] = {}
        for g, d in self.mapping.items():
            regions.setdefault(d, set()).add(g)
        return {d: frozenset(gs) for d, gs in regions.items()}

    def margin_for(self, decode_set: FrozenSet[int],
                   region: FrozenSet[CodeIndexVector],
                   margin: FrozenSet[CodeIndexVector]) -> FrozenSet[CodeIndexVector]:
        """R_1 union margin_1 minus R_D"""
        return (frozenset(region) | frozenset(margin)) - self.regions().get(frozenset(decode_set), frozenset())

    def to_dict(self) -> Dict[str, Any]:
        return {str(g): format_subset(d) for g, d in sorted(self.mapping.items())}


@dataclass(frozen=True)
class PartitionBoundReport:
    """Single-user bound minimized over partitions"""
    assignment: PartitionAssignment
    reports: Tuple[GepBoundReport, ...]
    strategy: str
    assignments_evaluated: int

    @property
    def total(self) -> float:
        return math.fsum(r.total for r in self.reports)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'total': self.total,
            'strategy': self.strategy,
            'assignments_evaluated': self.assignments_evaluated,
            'assignment': self.assignment.to_dict(),
            'decoders': [r.to_dict() for r in self.reports],
        }


@dataclass(frozen=True)
class VectorStatistics:
    """Per-g error statistics from a simulation or the exact oracle"""
    vector: CodeIndexVector
    zone: str
    trials: int
    errors: float
    collisions: float
    error_rate: float
    ci_low: float
    ci_high: float
    worst_message_rate: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'g': str(self.vector),
            'zone': self.zone,
            'trials': self.trials,
            'errors': self.errors,
            'collisions': self.collisions,
            'error_rate': self.error_rate,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
        }
        if self.worst_message_rate is not None:
            data['worst_message_rate'] = self.worst_message_rate
        return data


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated simulation or exact-oracle results

    ``event_probabilities`` maps each transmitted vector to the rates of the
    decoder events attributed to it (P_m and P_t for region vectors, P_i for
    the others).
    """
    mode: str
    blocklength: int
    seed: int
    exact: bool
    statistics: Tuple[VectorStatistics, ...]
    weights: Mapping[CodeIndexVector, float]
    policy: Dict[str, Any]
    analytic_bound: Optional[float] = None
    event_probabilities: Dict[str, Dict[str, float]] = field(default_factory=dict)
    message_handling: str = 'average-message'
    records: Tuple[Any, ...] = field(default=(), repr=False, compare=False)

    @property
    def gep(self) -> float:
        """sum_g P_e(g) exp(-N alpha_g) over the simulated vectors"""
        return math.fsum(
            s.error_rate * math.exp(-self.blocklength * self.weights[s.vector])
            for s in self.statistics
        )

    @property
    def worst_case_gep(self) -> Optional[float]:
        """GEP with per-g worst-message error rates (exact oracle only)"""
        if any(s.worst_message_rate is None for s in self.statistics):
            return None
        return math.fsum(
            s.worst_message_rate * math.exp(-self.blocklength * self.weights[s.vector])
            for s in self.statistics
        )

    def statistics_for(self, g: CodeIndexVector) -> VectorStatistics:
        for s in self.statistics:
            if s.vector == g:
                return s
        raise KeyError(str(g))

    def table(self) -> List[Dict[str, Any]]:
        """Per-g rows for CSV emission"""
        rows = []
        for s in self.statistics:
            row = {
                'g': str(s.vector),
                'zone': s.zone,
                'trials': s.trials,
                'error_rate': s.error_rate,
                'ci_low': s.ci_low,
                'ci_high': s.ci_high,
                'collision_rate': s.collisions / s.trials if s.trials else 0.0,
                'weighted_error': s.error_rate * math.exp(-self.blocklength * self.weights[s.vector]),
            }
            if self.analytic_bound is not None:
                row['analytic_bound'] = self.analytic_bound
            if self.exact:
                row['oracle_value'] = s.worst_message_rate
            rows.append(row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'mode': self.mode,
            'N': self.blocklength,
            'seed': self.seed,
            'exact': self.exact,
            'message_handling': self.message_handling,
            'gep': self.gep,
            'analytic_bound': self.analytic_bound,
            'policy': self.policy,
            'per_g': [s.to_dict() for s in self.statistics],
            'event_probabilities': {
                g: dict(sorted(events.items()))
                for g, events in sorted(self.event_probabilities.items())
            },
        }
        if self.exact:
            data['worst_case_gep'] = self.worst_case_gep
        return data


@dataclass(frozen=True)
class CodebookAverage:
    """Exact-oracle results repeated over codebook seeds"""
    seeds: Tuple[int, ...]
    reports: Tuple[SimulationReport, ...]

    def per_vector(self) -> Dict[str, Dict[str, float]]:
        rates: Dict[str, List[float]] = {}
        for report in self.reports:
            for s in report.statistics:
                rates.setdefault(str(s.vector), []).append(s.error_rate)
        return {
            g: {
                'mean': math.fsum(values) / len(values),
                'std': float(np.std(values)),
                'min': min(values),
                'max': max(values),
            }
            for g, values in rates.items()
        }

    @property
    def gep_mean(self) -> float:
        return math.fsum(r.gep for r in self.reports) / len(self.reports)

    @property
    def gep_std(self) -> float:
        return float(np.std([r.gep for r in self.reports]))

    def event_means(self) -> Dict[str, Dict[str, float]]:
        totals: Dict[str, Dict[str, float]] = {}
        for report in self.reports:
            for g, events in report.event_probabilities.items():
                bucket = totals.setdefault(g, {})
                for key, value in events.items():
                    bucket[key] = bucket.get(key, 0.0) + value
        count = len(self.reports)
        return {g: {k: v / count for k, v in events.items()} for g, events in totals.items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seeds': list(self.seeds),
            'gep_mean': self.gep_mean,
            'gep_std': self.gep_std,
            'per_g': dict(sorted(self.per_vector().items())),
            'event_probabilities': {
                g: dict(sorted(events.items())) for g, events in sorted(self.event_means().items())
            },
        }


@dataclass
class RunManifest:
    """Reproducibility record written next to every CLI result"""
    command: str
    arguments: Dict[str, Any]
    configuration: Dict[str, Any]
    seeds: Dict[str, Optional[int]]
    version: str
    started_at: str
    wall_clock_seconds: float = 0.0
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'arguments': self.arguments,
            'configuration': self.configuration,
            'seeds': self.seeds,
            'version': self.version,
            'started_at': self.started_at,
            'wall_clock_seconds': self.wall_clock_seconds,
            'input_digests': self.inputs,
            'output_digests': self.outputs,
        }
