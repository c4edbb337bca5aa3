"""
Simulation harness for the threshold decoder

Monte Carlo estimation of per-vector error rates and GEP, the exact
enumeration oracle for tiny instances, threshold calibration and the
event-level accounting of decoder failures.

Randomness streams are derived from the run seed: codebooks use
(seed, 0, user, option), Monte Carlo trials for the vector at enumeration
position p use (seed, 1, p) and calibration samples use (seed, 2, p).
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from config import Config
from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector, OperationConfig, WeightAssignment
from models.report_models import CodebookAverage, SimulationReport, VectorStatistics
from models.simulation_models import (
    CodebookSet,
    DecodeOutcome,
    ErrorMode,
    ThresholdPolicy,
    TrialRecord,
    event_key,
)
from utils.code_space import enumerate_vectors
from utils.decoder import DecodeTrace, ThresholdDecoder, classify_trial, generate_codebooks
from utils.exceptions import CapExceededError, DomainError, WeightError

logger = logging.getLogger(__name__)

ORACLE_CAP = Config.ORACLE_CAP
CONFIDENCE_LEVEL = 0.95
DEFAULT_OFFSETS = tuple(np.linspace(-1.0, 1.0, 41))


def _check_run(weights: WeightAssignment, blocklength: int) -> None:
    if not isinstance(blocklength, int) or blocklength < 1:
        raise DomainError(f"blocklength N must be a positive integer, got {blocklength}")
    if weights.blocklength != blocklength:
        raise WeightError(f"weights were built for N={weights.blocklength}, run uses N={blocklength}")


def wilson_interval(errors: int, trials: int) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion"""
    interval = stats.binomtest(int(errors), int(trials)).proportion_ci(
        confidence_level=CONFIDENCE_LEVEL, method='wilson'
    )
    return float(interval.low), float(interval.high)


def _relevant_users(config: OperationConfig, mode: ErrorMode) -> Tuple[int, ...]:
    return config.decode_users if mode is ErrorMode.EQ10 else (1,)


def run_monte_carlo(channel: ChannelModel, ensemble: CodeEnsembleVector, config: OperationConfig,
                    policy: ThresholdPolicy, weights: WeightAssignment, blocklength: int,
                    trials: int, seed: int, mode: ErrorMode = ErrorMode.EQ10,
                    vectors: Optional[Sequence[CodeIndexVector]] = None,
                    codebooks: Optional[CodebookSet] = None,
                    analytic_bound: Optional[float] = None,
                    record_events: bool = False, keep_records: bool = False,
                    threads: int = 1, verbose: bool = False) -> SimulationReport:
    """Estimate per-vector error rates with uniformly sampled messages

    The maximum over messages is estimated by the uniform average, which is
    reported as ``average-message``.
    """
    mode = ErrorMode(mode)
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    _check_run(weights, blocklength)

    all_vectors = enumerate_vectors(ensemble)
    vectors = sorted(vectors) if vectors is not None else all_vectors
    codebooks = codebooks or generate_codebooks(ensemble, blocklength, seed)
    decoder = ThresholdDecoder(channel, ensemble, config, policy, weights, codebooks, vectors=all_vectors)

    def simulate(g: CodeIndexVector):
        position = all_vectors.index(g)
        rng = np.random.default_rng([seed, 1, position])
        counts = codebooks.message_counts(g)
        g0 = ensemble.channel_g0(channel, g)
        errors = collisions = 0
        event_counts: Dict[str, int] = {}
        records: List[TrialRecord] = []

        for _ in tqdm(range(trials), desc=f"g={g}", disable=not verbose, leave=False):
            messages = tuple(int(rng.integers(c)) for c in counts)
            y = channel.sample_outputs(g0, codebooks.encode(g, messages), rng)
            trace = DecodeTrace() if record_events else None
            outcome = decoder.decode(y, trace)
            error = classify_trial(messages, g, outcome, config, mode)
            errors += error
            collisions += outcome.is_collision

            fired = frozenset(decoder.fired_events(trace, g, messages)) if record_events else frozenset()
            for key in fired:
                event_counts[key] = event_counts.get(key, 0) + 1
            if keep_records:
                records.append(TrialRecord(g, messages, outcome, error, fired))

        low, high = wilson_interval(errors, trials)
        statistics = VectorStatistics(
            vector=g, zone=config.zone(g).value, trials=trials, errors=float(errors),
            collisions=float(collisions), error_rate=errors / trials, ci_low=low, ci_high=high,
        )
        rates = {key: count / trials for key, count in event_counts.items()}
        return statistics, rates, records

    logger.info(f"Monte Carlo: {len(vectors)} vector(s) x {trials} trial(s), N={blocklength}, mode {mode.value}")
    if threads > 1 and len(vectors) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(simulate, vectors))
    else:
        results = [simulate(g) for g in vectors]

    return SimulationReport(
        mode=mode.value,
        blocklength=blocklength,
        seed=seed,
        exact=False,
        statistics=tuple(r[0] for r in results),
        weights={g: weights.alpha(g) for g in vectors},
        policy=policy.to_dict(),
        analytic_bound=analytic_bound,
        event_probabilities={str(g): r[1] for g, r in zip(vectors, results) if record_events},
        message_handling='average-message',
        records=tuple(record for r in results for record in r[2]),
    )


def _output_sequences(alphabet: int, blocklength: int) -> np.ndarray:
    return np.array(list(itertools.product(range(alphabet), repeat=blocklength)), dtype=int)


def exact_oracle(channel: ChannelModel, ensemble: CodeEnsembleVector, config: OperationConfig,
                 policy: ThresholdPolicy, weights: WeightAssignment, blocklength: int,
                 seed: int, mode: ErrorMode = ErrorMode.EQ10,
                 vectors: Optional[Sequence[CodeIndexVector]] = None,
                 codebooks: Optional[CodebookSet] = None, cap: int = ORACLE_CAP,
                 analytic_bound: Optional[float] = None, record_events: bool = True,
                 verbose: bool = False) -> SimulationReport:
    """Exact error probabilities for fixed codebooks by full enumeration

    Every message vector and every output sequence in Y^N is visited. The
    decoder runs once per output sequence; per (w, g) the error probability
    sums the channel probabilities of the outputs judged as errors.
    """
    mode = ErrorMode(mode)
    _check_run(weights, blocklength)
    all_vectors = enumerate_vectors(ensemble)
    vectors = sorted(vectors) if vectors is not None else all_vectors
    codebooks = codebooks or generate_codebooks(ensemble, blocklength, seed)

    outputs = channel.output_alphabet_size ** blocklength
    terms = outputs * sum(int(np.prod(codebooks.message_counts(g))) for g in vectors)
    if outputs > cap or terms > cap:
        raise CapExceededError("exact oracle enumeration terms", max(outputs, terms), cap)

    decoder = ThresholdDecoder(channel, ensemble, config, policy, weights, codebooks, vectors=all_vectors)
    ys = _output_sequences(channel.output_alphabet_size, blocklength)
    traces: List[Optional[DecodeTrace]] = []
    outcomes: List[DecodeOutcome] = []
    for y in tqdm(ys, desc="outputs", disable=not verbose, leave=False):
        trace = DecodeTrace() if record_events else None
        outcomes.append(decoder.decode(y, trace))
        traces.append(trace)
    collided = np.array([o.is_collision for o in outcomes])
    logger.info(f"Exact oracle: {outputs} output sequence(s), {terms} enumeration term(s)")

    relevant = _relevant_users(config, mode)
    statistics = []
    event_probabilities: Dict[str, Dict[str, float]] = {}
    time_index = np.arange(blocklength)[None, :]

    for g in vectors:
        g0 = ensemble.channel_g0(channel, g)
        counts = codebooks.message_counts(g)
        by_relevant: Dict[Tuple[int, ...], List[float]] = {}
        error_total, collision_total = [], []
        events: Dict[str, float] = {}

        message_vectors = list(itertools.product(*(range(c) for c in counts)))
        for messages in message_vectors:
            rows = channel.transition[g0][tuple(codebooks.encode(g, messages))]
            probs = rows[time_index, ys].prod(axis=1)
            errors = np.array([classify_trial(messages, g, o, config, mode) for o in outcomes])
            p_error = math.fsum(probs[errors])
            error_total.append(p_error)
            collision_total.append(math.fsum(probs[collided]))
            by_relevant.setdefault(tuple(messages[k - 1] for k in relevant), []).append(p_error)

            if record_events:
                for i in np.flatnonzero(probs > 0):
                    for key in decoder.fired_events(traces[i], g, messages):
                        events[key] = events.get(key, 0.0) + probs[i]

        total = len(message_vectors)
        error_rate = math.fsum(error_total) / total
        worst = max(math.fsum(v) / len(v) for v in by_relevant.values())
        statistics.append(VectorStatistics(
            vector=g, zone=config.zone(g).value, trials=total, errors=math.fsum(error_total),
            collisions=math.fsum(collision_total), error_rate=error_rate,
            ci_low=error_rate, ci_high=error_rate, worst_message_rate=worst,
        ))
        if record_events:
            event_probabilities[str(g)] = {key: value / total for key, value in events.items()}

    return SimulationReport(
        mode=mode.value,
        blocklength=blocklength,
        seed=seed,
        exact=True,
        statistics=tuple(statistics),
        weights={g: weights.alpha(g) for g in vectors},
        policy=policy.to_dict(),
        analytic_bound=analytic_bound,
        event_probabilities=event_probabilities,
        message_handling='exact: average-message and worst relevant message',
    )


def codebook_averaged_oracle(seeds: Sequence[int], channel: ChannelModel, ensemble: CodeEnsembleVector,
                             config: OperationConfig, policy: ThresholdPolicy,
                             weights: WeightAssignment, blocklength: int,
                             mode: ErrorMode = ErrorMode.EQ10, cap: int = ORACLE_CAP) -> CodebookAverage:
    """Repeat the exact oracle over codebook seeds"""
    if not seeds:
        raise DomainError("codebook averaging needs at least one seed")
    reports = tuple(
        exact_oracle(channel, ensemble, config, policy, weights, blocklength, seed, mode, cap=cap)
        for seed in seeds
    )
    return CodebookAverage(seeds=tuple(seeds), reports=reports)


def estimate_event_rates(records: Sequence[TrialRecord], g: CodeIndexVector, g_tilde: CodeIndexVector,
                         subset) -> Dict[str, Optional[float]]:
    """Empirical P_m, P_t and P_i for one (g, g~, S) from recorded trials

    P_m and P_t are frequencies over trials that sent g, P_i over trials that
    sent g~. A rate is None when no trial sent the relevant vector.
    """
    def frequency(kind: str, sent: CodeIndexVector) -> Optional[float]:
        relevant = [r for r in records if r.vector == sent]
        if not relevant:
            return None
        key = event_key(kind, g, g_tilde, subset)
        return sum(key in r.events for r in relevant) / len(relevant)

    return {
        'P_m': frequency('m', g),
        'P_t': frequency('t', g),
        'P_i': frequency('i', g_tilde),
    }


def event_decomposition(report: SimulationReport) -> Dict[str, Any]:
    """Compare each vector's error rate with the sum of its event probabilities"""
    if not ErrorMode(report.mode).three_zone:
        raise DomainError("event decomposition applies to the eq10 and eq12 modes")
    per_g = {}
    weighted_error, weighted_events = [], []
    for s in report.statistics:
        event_sum = math.fsum(report.event_probabilities.get(str(s.vector), {}).values())
        factor = math.exp(-report.blocklength * report.weights[s.vector])
        per_g[str(s.vector)] = {
            'error_rate': s.error_rate,
            'event_sum': event_sum,
            'holds': s.error_rate <= event_sum + 1e-12,
        }
        weighted_error.append(s.error_rate * factor)
        weighted_events.append(event_sum * factor)
    return {
        'per_g': per_g,
        'weighted_error': math.fsum(weighted_error),
        'weighted_events': math.fsum(weighted_events),
    }


def calibrate_policy(channel: ChannelModel, ensemble: CodeEnsembleVector, config: OperationConfig,
                     weights: WeightAssignment, blocklength: int, trials: int, seed: int,
                     offsets: Sequence[float] = DEFAULT_OFFSETS,
                     codebooks: Optional[CodebookSet] = None) -> ThresholdPolicy:
    """Tune the offset t of every (g, g~, S) threshold

    For each triple t minimizes P_t exp(-N alpha_g) + P_i exp(-N alpha_g~),
    both estimated from ``trials`` transmissions per vector. Candidates are
    ``offsets`` plus the midpoints between observed switching points; ties
    go to the smallest |t|.
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    _check_run(weights, blocklength)
    all_vectors = enumerate_vectors(ensemble)
    codebooks = codebooks or generate_codebooks(ensemble, blocklength, seed)
    decoder = ThresholdDecoder(channel, ensemble, config, ThresholdPolicy(), weights, codebooks,
                               vectors=all_vectors)
    n = blocklength
    samples: Dict[CodeIndexVector, List[Tuple[Tuple[int, ...], np.ndarray]]] = {}

    def sample(v: CodeIndexVector):
        if v not in samples:
            rng = np.random.default_rng([seed, 2, all_vectors.index(v)])
            counts = codebooks.message_counts(v)
            g0 = ensemble.channel_g0(channel, v)
            drawn = []
            for _ in range(trials):
                messages = tuple(int(rng.integers(c)) for c in counts)
                drawn.append((messages, channel.sample_outputs(g0, codebooks.encode(v, messages), rng)))
            samples[v] = drawn
        return samples[v]

    chosen: Dict[str, float] = {}
    base_offsets = np.asarray(offsets, dtype=float)
    with np.errstate(invalid='ignore'):
        for g in decoder.region:
            for g_tilde, subset in decoder.constraints[g]:
                miss = []
                for messages, y in sample(g):
                    w_d = tuple(messages[k - 1] for k in decoder.decode_users)
                    grid = decoder.log_likelihoods(g, y)
                    threshold = np.broadcast_to(decoder.log_thresholds(g, g_tilde, subset, y), grid.shape)
                    miss.append((grid[w_d] - threshold[w_d]) / n)
                accept = []
                for messages, y in sample(g_tilde):
                    w_d = tuple(messages[k - 1] for k in decoder.decode_users)
                    grid = decoder.log_likelihoods(g, y)
                    threshold = decoder.log_thresholds(g, g_tilde, subset, y)
                    allowed = decoder.distinct_mask(g, g_tilde, subset, w_d, grid.shape)
                    margins = np.where(allowed, grid - threshold, -np.inf)
                    selector = tuple(
                        w_d[position] if k in subset else slice(None)
                        for position, k in enumerate(decoder.decode_users)
                    )
                    accept.append(float(np.max(margins[selector])) / n)

                miss_values, accept_values = np.array(miss), np.array(accept)
                switching = np.unique(-np.concatenate([miss_values, accept_values]))
                switching = switching[np.isfinite(switching)]
                candidates = np.concatenate([base_offsets, (switching[:-1] + switching[1:]) / 2])

                p_t = (miss_values[None, :] <= -candidates[:, None]).mean(axis=1)
                p_i = (accept_values[None, :] > -candidates[:, None]).mean(axis=1)
                objective = p_t * weights.factor(g) + p_i * weights.factor(g_tilde)
                order = np.lexsort((candidates, np.abs(candidates), objective))
                best = float(candidates[order[0]])
                chosen[ThresholdPolicy.key(g, g_tilde, subset)] = best
                logger.debug(
                    f"Offset for {ThresholdPolicy.key(g, g_tilde, subset)}: t={best:.6g} "
                    f"(objective {objective[order[0]]:.6g})"
                )

    logger.info(f"Calibrated {len(chosen)} threshold offset(s) from {trials} trial(s) per vector")
    return ThresholdPolicy(
        offsets=chosen,
        description=f"likelihood-ratio thresholds, offsets calibrated on {trials} trial(s) per vector at N={n}",
    )
