"""
Weighted-likelihood threshold decoder

A (D, R_D) decoder scores every candidate (w_D, g), g in R_D, by its weighted
likelihood L_g = P(Y | X_D, g_Dbar) exp(-N alpha_g). A candidate survives
when, for every S within D and every g~ outside R_D with g~_S = g_S, its
likelihood strictly exceeds exp(-N t) times the g~-side likelihood of X_S
(the users of D outside S averaged over g~'s input distributions). For S = D
only g~ outside both the region and the margin are tested. The decoder
returns the surviving candidate with the largest weighted likelihood, or a
collision when nothing survives or the maximum is tied between distinct
(w_D, g) candidates.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector, OperationConfig, WeightAssignment, Zone
from models.simulation_models import (
    CODEBOOK_CAP,
    CodebookSet,
    DecodeOutcome,
    ErrorMode,
    ThresholdPolicy,
    codeword_count,
    event_key,
)
from utils.code_space import enumerate_vectors
from utils.exceptions import CapExceededError, DomainError
from utils.exponents import induced_channel
from utils.helpers import subsets_of

logger = logging.getLogger(__name__)

Constraint = Tuple[CodeIndexVector, frozenset]


def generate_codebooks(ensemble: CodeEnsembleVector, blocklength: int, seed: int,
                       cap: int = CODEBOOK_CAP) -> CodebookSet:
    """Draw every (user, option) codebook i.i.d. from the option's input distribution

    Each codebook has its own stream derived from (seed, user, option), so the
    set is a pure function of the seed.
    """
    if not isinstance(blocklength, int) or blocklength < 1:
        raise DomainError(f"blocklength N must be a positive integer, got {blocklength}")
    books = {}
    for k, options in enumerate(ensemble.per_user_options, start=1):
        for j, option in enumerate(options):
            count = codeword_count(option.rate, blocklength, cap)
            rng = np.random.default_rng([seed, 0, k, j])
            dist = option.distribution
            books[(k, j)] = rng.choice(dist.size, size=(count, blocklength), p=dist)
            logger.debug(f"Codebook user {k} option {j}: {count} codeword(s) of length {blocklength}")
    return CodebookSet(blocklength=blocklength, books=books, seed=seed)


def _log(values) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return np.log(np.asarray(values, dtype=float))


def weighted_likelihood(channel: ChannelModel, ensemble: CodeEnsembleVector, g: CodeIndexVector,
                        decode_set: Iterable[int], x_d_seq: np.ndarray, y_seq: Sequence[int],
                        alpha: float) -> float:
    """log L_g = sum_j log P(y_j | x_Dj, g_Dbar) - N alpha

    ``x_d_seq`` has one row per decoded user (ascending user order). A
    zero-probability symbol gives -inf.
    """
    decode = tuple(sorted(decode_set))
    table = _log(induced_channel(channel, ensemble, g, decode))
    x_d_seq = np.asarray(x_d_seq, dtype=int).reshape(len(decode), -1)
    y_seq = np.asarray(y_seq, dtype=int)
    if x_d_seq.shape[1] != y_seq.size:
        raise DomainError(f"input and output sequences differ in length: {x_d_seq.shape[1]} vs {y_seq.size}")
    total = math.fsum(float(table[tuple(x_d_seq[:, j]) + (y_seq[j],)]) for j in range(y_seq.size))
    return total - y_seq.size * alpha


def marginal_table(channel: ChannelModel, ensemble: CodeEnsembleVector, g_tilde: CodeIndexVector,
                   decode_users: Sequence[int], subset: Iterable[int]) -> np.ndarray:
    """sum_{x_(D\\S)} P(y | x_D, g~_Dbar) prod_{k in D\\S} P_g~k(x_k)

    Axes: the users of S in ascending order, then Y.
    """
    decode_users = tuple(decode_users)
    subset = set(subset)
    tensor = induced_channel(channel, ensemble, g_tilde, decode_users)
    dists = ensemble.input_dists(g_tilde)
    for position in range(len(decode_users) - 1, -1, -1):
        k = decode_users[position]
        if k not in subset:
            tensor = np.tensordot(tensor, dists[k], axes=([position], [0]))
    return tensor


def log_threshold(channel: ChannelModel, ensemble: CodeEnsembleVector, g_tilde: CodeIndexVector,
                  decode_set: Iterable[int], subset: Iterable[int], x_s_seq: np.ndarray,
                  y_seq: Sequence[int], alpha_tilde: float, offset: float) -> float:
    """log of exp(-N t) * L~_g~(X_S, Y), scalar path"""
    decode = tuple(sorted(decode_set))
    subset = tuple(sorted(subset))
    table = _log(marginal_table(channel, ensemble, g_tilde, decode, subset))
    y_seq = np.asarray(y_seq, dtype=int)
    n = y_seq.size
    x_s_seq = np.asarray(x_s_seq, dtype=int).reshape(len(subset), n)
    base = math.fsum(float(table[tuple(x_s_seq[:, j]) + (y_seq[j],)]) for j in range(n))
    return -n * offset + base - n * alpha_tilde


@dataclass
class DecodeTrace:
    """Per-output intermediate results of one decode call

    ``log_likelihood[g]`` has one axis per decoded user indexed by message;
    ``passes[g][(g~, S)]`` is the boolean constraint mask on the same grid.
    """
    log_likelihood: Dict[CodeIndexVector, np.ndarray] = field(default_factory=dict)
    passes: Dict[CodeIndexVector, Dict[Constraint, np.ndarray]] = field(default_factory=dict)
    survivors: Dict[CodeIndexVector, np.ndarray] = field(default_factory=dict)


class ThresholdDecoder:
    """The (D, R_D) threshold decoder for fixed codebooks, policy and weights"""

    def __init__(self, channel: ChannelModel, ensemble: CodeEnsembleVector, config: OperationConfig,
                 policy: ThresholdPolicy, weights: WeightAssignment, codebooks: CodebookSet,
                 vectors: Optional[Sequence[CodeIndexVector]] = None,
                 grid_cap: int = CODEBOOK_CAP * 64):
        ensemble.check_against(channel)
        config.check_users(channel.num_users)
        self.channel = channel
        self.ensemble = ensemble
        self.config = config
        self.policy = policy
        self.weights = weights
        self.codebooks = codebooks
        self.blocklength = codebooks.blocklength
        self.decode_users = config.decode_users
        self.vectors = list(vectors) if vectors is not None else enumerate_vectors(ensemble)
        self.region = sorted(config.region)
        weights.require(self.vectors)

        self._position = {k: i for i, k in enumerate(self.decode_users)}
        self._log_channel: Dict[CodeIndexVector, np.ndarray] = {}
        self._tables: Dict[Tuple[CodeIndexVector, frozenset], np.ndarray] = {}
        self.constraints: Dict[CodeIndexVector, List[Constraint]] = {}

        for g in self.region:
            ensemble.check_vector(g)
            size = int(np.prod([codebooks.count(k, g.option(k)) for k in self.decode_users])) * self.blocklength
            if size > grid_cap:
                raise CapExceededError(f"candidate grid for {g}", size, grid_cap)
            self._log_channel[g] = _log(induced_channel(channel, ensemble, g, self.decode_users))
            self.constraints[g] = self._constraints_for(g)
            for g_tilde, subset in self.constraints[g]:
                self.table(g_tilde, subset)

    def _constraints_for(self, g: CodeIndexVector) -> List[Constraint]:
        decode_set = frozenset(self.decode_users)
        constraints = []
        for subset in subsets_of(self.decode_users):
            for g_tilde in self.vectors:
                if g_tilde in self.config.region or not g.agrees_on(g_tilde, subset):
                    continue
                if subset == decode_set and g_tilde in self.config.margin:
                    continue
                constraints.append((g_tilde, subset))
        return constraints

    def table(self, g_tilde: CodeIndexVector, subset: frozenset) -> np.ndarray:
        key = (g_tilde, subset)
        if key not in self._tables:
            self._tables[key] = _log(
                marginal_table(self.channel, self.ensemble, g_tilde, self.decode_users, subset)
            )
        return self._tables[key]

    def _indices(self, g: CodeIndexVector, users: Iterable[int]) -> List[np.ndarray]:
        """Codeword symbol arrays broadcast over the message grid (last axis: time)"""
        dims = len(self.decode_users)
        out = []
        for k in users:
            words = self.codebooks.codewords(k, g.option(k))
            shape = [1] * dims + [self.blocklength]
            shape[self._position[k]] = words.shape[0]
            out.append(words.reshape(shape))
        return out

    def log_likelihoods(self, g: CodeIndexVector, y: np.ndarray) -> np.ndarray:
        """log L_g over the full message grid of D"""
        symbols = self._log_channel[g][tuple(self._indices(g, self.decode_users)) + (y,)]
        return symbols.sum(axis=-1) - self.blocklength * self.weights.alpha(g)

    def log_thresholds(self, g: CodeIndexVector, g_tilde: CodeIndexVector, subset: frozenset,
                       y: np.ndarray) -> np.ndarray:
        """log threshold over the message grid (size-1 axes for users outside S)"""
        users = sorted(subset)
        table = self.table(g_tilde, subset)
        dims = len(self.decode_users)
        if users:
            base = table[tuple(self._indices(g, users)) + (y,)].sum(axis=-1)
        else:
            base = np.full((1,) * dims, table[y].sum())
        n = self.blocklength
        offset = self.policy.offset(g, g_tilde, subset)
        return -n * offset + base - n * self.weights.alpha(g_tilde)

    def decode(self, y: Sequence[int], trace: Optional[DecodeTrace] = None) -> DecodeOutcome:
        y = np.asarray(y, dtype=int)
        if y.shape != (self.blocklength,):
            raise DomainError(f"output sequence must have length N={self.blocklength}, got {y.shape}")

        best = -math.inf
        scored = []
        for g in self.region:
            loglik = self.log_likelihoods(g, y)
            survive = np.ones(loglik.shape, dtype=bool)
            passes = {}
            for g_tilde, subset in self.constraints[g]:
                mask = loglik > self.log_thresholds(g, g_tilde, subset, y)
                passes[(g_tilde, subset)] = mask
                survive &= mask
            if trace is not None:
                trace.log_likelihood[g] = loglik
                trace.passes[g] = passes
                trace.survivors[g] = survive
            if survive.any():
                best = max(best, float(loglik[survive].max()))
                scored.append((g, loglik, survive))

        if not scored:
            return DecodeOutcome.collision(self.decode_users)

        winners = []
        for g, loglik, survive in scored:
            for index in np.argwhere(survive & (loglik == best)):
                winners.append((tuple(int(i) for i in index), g))
        if len(winners) != 1:
            return DecodeOutcome.collision(self.decode_users)

        messages, g = winners[0]
        return DecodeOutcome(decoded=True, decode_users=self.decode_users, messages=messages,
                             vector=g, log_likelihood=best)

    def recheck(self, outcome: DecodeOutcome, y: Sequence[int]) -> bool:
        """Independently confirm that a decoded pair survives every constraint"""
        if not outcome.decoded:
            return True
        g = outcome.vector
        words = {
            k: self.codebooks.codewords(k, g.option(k))[outcome.message(k)]
            for k in self.decode_users
        }
        x_d = np.stack([words[k] for k in self.decode_users])
        loglik = weighted_likelihood(self.channel, self.ensemble, g, self.decode_users,
                                     x_d, y, self.weights.alpha(g))
        for g_tilde, subset in self.constraints[g]:
            users = sorted(subset)
            x_s = np.stack([words[k] for k in users]) if users else np.zeros((0, self.blocklength), int)
            threshold = log_threshold(
                self.channel, self.ensemble, g_tilde, self.decode_users, subset, x_s, y,
                self.weights.alpha(g_tilde), self.policy.offset(g, g_tilde, subset),
            )
            if not loglik > threshold:
                logger.warning(f"Decoded pair {outcome.messages}/{g} fails constraint {g_tilde} S={users}")
                return False
        return True

    def fired_events(self, trace: DecodeTrace, g: CodeIndexVector,
                     messages: Tuple[int, ...]) -> List[str]:
        """P_m / P_t / P_i events fired when (messages, g) was sent

        ``messages`` holds one message per user (all K users).
        """
        w_d = tuple(messages[k - 1] for k in self.decode_users)
        if g in self.config.region:
            return self._region_events(trace, g, w_d)
        return self._outside_events(trace, g, w_d)

    def distinct_mask(self, g: CodeIndexVector, g_sent: CodeIndexVector, subset: frozenset,
                      w_sent: Tuple[int, ...], shape: Tuple[int, ...]) -> np.ndarray:
        """Candidates (w_D, g) with (w_k, g_k) != (w~_k, g~_k) for every k in D outside S

        ``w_sent`` holds the sent messages of the decoded users; ``shape`` is
        the message grid of g.
        """
        allowed = np.ones(shape, dtype=bool)
        for position, k in enumerate(self.decode_users):
            if k in subset or g.option(k) != g_sent.option(k):
                continue
            axis = [1] * len(shape)
            axis[position] = shape[position]
            keep = np.ones(shape[position], dtype=bool)
            keep[w_sent[position]] = False
            allowed = allowed & keep.reshape(axis)
        return allowed

    def _selector(self, subset: frozenset, w_d: Tuple[int, ...]) -> Tuple:
        return tuple(
            w_d[position] if k in subset else slice(None)
            for position, k in enumerate(self.decode_users)
        )

    def _region_events(self, trace: DecodeTrace, g: CodeIndexVector, w_d: Tuple[int, ...]) -> List[str]:
        events = []
        true_value = trace.log_likelihood[g][w_d]
        decode_set = frozenset(self.decode_users)
        for subset in subsets_of(self.decode_users):
            if subset == decode_set:
                continue
            for g_tilde in self.region:
                if not g.agrees_on(g_tilde, subset):
                    continue
                grid = trace.log_likelihood[g_tilde]
                allowed = self.distinct_mask(g_tilde, g, subset, w_d, grid.shape)
                selector = self._selector(subset, w_d)
                competing = allowed[selector] & (grid[selector] >= true_value)
                if bool(competing.any()):
                    events.append(event_key('m', g, g_tilde, subset))
        for (g_tilde, subset), mask in trace.passes[g].items():
            if not mask[w_d]:
                events.append(event_key('t', g, g_tilde, subset))
        return events

    def _outside_events(self, trace: DecodeTrace, g_tilde: CodeIndexVector,
                        w_d: Tuple[int, ...]) -> List[str]:
        events = []
        for g in self.region:
            for (other, subset), mask in trace.passes[g].items():
                if other != g_tilde:
                    continue
                allowed = self.distinct_mask(g, g_tilde, subset, w_d, mask.shape)
                if bool((mask & allowed)[self._selector(subset, w_d)].any()):
                    events.append(event_key('i', g, g_tilde, subset))
        return events


def classify_trial(messages: Tuple[int, ...], g: CodeIndexVector, outcome: DecodeOutcome,
                   config: OperationConfig, mode: ErrorMode) -> bool:
    """True when the outcome counts as an error for (messages, g) under ``mode``"""
    mode = ErrorMode(mode)
    relevant = config.decode_users if mode is ErrorMode.EQ10 else (1,)
    if 1 not in config.decode_set and mode is not ErrorMode.EQ10:
        raise DomainError(f"mode {mode.value} needs user 1 in the decode set")

    zone = config.zone(g)
    if zone is Zone.MARGIN and not mode.three_zone:
        zone = Zone.OUTSIDE

    if zone is Zone.REGION:
        return not outcome.matches(messages, g, relevant)
    if zone is Zone.MARGIN or mode is ErrorMode.EQ1:
        return outcome.decoded and not outcome.matches(messages, g, relevant)
    return outcome.decoded
