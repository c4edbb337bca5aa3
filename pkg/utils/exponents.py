"""
Error exponents of the (D, R_D) decoder bound

Three exponent families are maximized over (rho, s):

  mD    wrong-message events between two vectors of the operation region,
        S a proper subset of D, max over 0 < rho <= 1 and 0 <= s <= 1
  iD_S  region / out-of-region confusion with S a proper subset of D,
        max over 0 < rho <= 1 and 0 <= s <= 1 - rho
  iD_D  out-of-region misdetection with all decoded codes equal (S = D),
        max over 0 <= s <= 1

The channel seen by the decoder is P(Y | X_D, g_Dbar): the interferer option
is fixed by g and every non-decoded user is averaged over its input
distribution. Objectives are evaluated in the log domain (logsumexp) so that
powers near the rho floor do not underflow; powers use the conventions
0^0 = 1 and 0^p = 0 for p > 0.
"""

import json
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Optional, Tuple

import numpy as np
from cachetools import LRUCache
from scipy.special import logsumexp

from config import Config
from models.channel_models import ChannelModel
from models.code_models import CodeEnsembleVector, CodeIndexVector
from models.report_models import ExponentReport
from utils.exceptions import DomainError, IndexRangeError
from utils.helpers import format_subset

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2
DOMAIN_TOLERANCE = 1e-12


class ExponentKind(Enum):
    MD = "mD"
    ID_S = "iD_S"
    ID_D = "iD_D"


@dataclass(frozen=True, eq=False)
class ExponentQuery:
    """Everything one exponent depends on"""
    channel: ChannelModel
    ensemble: CodeEnsembleVector
    decode_set: FrozenSet[int]
    subset: FrozenSet[int]
    g: CodeIndexVector
    g_tilde: CodeIndexVector
    alpha_g: float
    alpha_g_tilde: float
    kind: ExponentKind

    def __post_init__(self):
        object.__setattr__(self, 'decode_set', frozenset(self.decode_set))
        object.__setattr__(self, 'subset', frozenset(self.subset))
        object.__setattr__(self, 'kind', ExponentKind(self.kind))
        object.__setattr__(self, 'alpha_g', float(self.alpha_g))
        object.__setattr__(self, 'alpha_g_tilde', float(self.alpha_g_tilde))

        users = set(range(1, self.channel.num_users + 1))
        if not self.decode_set or not self.decode_set <= users:
            raise IndexRangeError(f"decode set {format_subset(self.decode_set)} outside 1..{len(users)}")
        if self.kind is ExponentKind.ID_D:
            if self.subset != self.decode_set:
                raise DomainError("kind iD_D requires S = D")
        elif not self.subset < self.decode_set:
            raise DomainError(f"kind {self.kind.value} requires S to be a proper subset of D")
        if self.alpha_g < 0 or self.alpha_g_tilde < 0:
            raise DomainError("weights alpha must be nonnegative")

        self.ensemble.check_against(self.channel)
        self.ensemble.check_vector(self.g)
        self.ensemble.check_vector(self.g_tilde)
        if not self.g.agrees_on(self.g_tilde, self.subset):
            raise DomainError(f"g and g~ must agree on S={format_subset(self.subset)}")

    @property
    def decode_users(self) -> Tuple[int, ...]:
        return tuple(sorted(self.decode_set))

    @property
    def free_users(self) -> Tuple[int, ...]:
        """Users of D outside S"""
        return tuple(sorted(self.decode_set - self.subset))

    def cache_key(self) -> Tuple:
        return (
            self.kind.value,
            self.decode_users,
            tuple(sorted(self.subset)),
            str(self.g),
            str(self.g_tilde),
            repr(self.alpha_g),
            repr(self.alpha_g_tilde),
        )

    @cached_property
    def tensors(self) -> '_QueryTensors':
        return _QueryTensors(self)


def induced_channel(channel: ChannelModel, ensemble: CodeEnsembleVector,
                    g: CodeIndexVector, decode_users) -> np.ndarray:
    """P(Y | X_D, g_Dbar) with one axis per decoded user (ascending) then Y"""
    return channel.marginalize(ensemble.channel_g0(channel, g), decode_users, ensemble.input_dists(g))


class _QueryTensors:
    """Log-domain weighted channels and input products for one query

    Every array carries a leading batch axis of length 1 for the s values.
    """

    def __init__(self, query: ExponentQuery):
        decode = query.decode_users
        position = {k: i for i, k in enumerate(decode)}
        ndim = len(decode) + 1

        w_g = induced_channel(query.channel, query.ensemble, query.g, decode)
        w_gt = induced_channel(query.channel, query.ensemble, query.g_tilde, decode)
        self.log_v_g = (_log(w_g) - query.alpha_g)[None, ...]
        self.log_v_gt = (_log(w_gt) - query.alpha_g_tilde)[None, ...]

        dists_g = query.ensemble.input_dists(query.g)
        dists_gt = query.ensemble.input_dists(query.g_tilde)

        def log_product(dists, users) -> np.ndarray:
            out = np.zeros((1,) * (ndim + 1))
            for k in users:
                shape = [1] * (ndim + 1)
                shape[1 + position[k]] = dists[k].size
                out = out + _log(dists[k]).reshape(shape)
            return out

        self.log_p_s = log_product(dists_g, sorted(query.subset))
        self.log_p_free_g = log_product(dists_g, query.free_users)
        self.log_p_free_gt = log_product(dists_gt, query.free_users)
        self.log_p_all_g = log_product(dists_g, decode)
        self.free_axes = tuple(1 + position[k] for k in query.free_users)
        self.sum_axes = tuple(range(1, ndim + 1))
        self.ndim = ndim

        self.rate_gt_free = query.ensemble.rate_sum(query.g_tilde, query.free_users)
        self.rate_g_free = query.ensemble.rate_sum(query.g, query.free_users)

    def column(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float).reshape((-1,) + (1,) * self.ndim)


def _log(values) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return np.log(np.asarray(values, dtype=float))


def _scaled(coefficient, log_values: np.ndarray) -> np.ndarray:
    """coefficient * log(x), with 0 * log(0) = 0 so that 0^0 = 1"""
    coefficient = np.asarray(coefficient, dtype=float)
    with np.errstate(invalid='ignore'):
        return np.where(coefficient == 0, 0.0, coefficient * log_values)


def _log_power_sum(log_base: np.ndarray, exponent, log_weights: np.ndarray,
                   axes: Tuple[int, ...]) -> np.ndarray:
    """log sum_axes weights * base^exponent"""
    with np.errstate(divide='ignore', invalid='ignore'):
        return logsumexp(_scaled(exponent, log_base) + log_weights, axis=axes, keepdims=True)


def _negative_log_total(log_inner: np.ndarray, axes: Tuple[int, ...]) -> np.ndarray:
    with np.errstate(divide='ignore', invalid='ignore'):
        return -logsumexp(log_inner, axis=axes)


def batch_objective_md(query: ExponentQuery, rho: float, s: np.ndarray) -> np.ndarray:
    t = query.tensors
    s_col = t.column(s)
    log_first = _log_power_sum(t.log_v_g, 1.0 - s_col, t.log_p_free_g, t.free_axes)
    log_second = _log_power_sum(t.log_v_gt, s_col / rho, t.log_p_free_gt, t.free_axes)
    log_inner = t.log_p_s + log_first + rho * log_second
    return -rho * t.rate_gt_free + _negative_log_total(log_inner, t.sum_axes)


def batch_objective_id_s(query: ExponentQuery, rho: float, s: np.ndarray) -> np.ndarray:
    t = query.tensors
    s_col = t.column(s)
    log_first = _log_power_sum(t.log_v_g, s_col / (s_col + rho), t.log_p_free_g, t.free_axes)
    log_second = _log_power_sum(t.log_v_gt, 1.0, t.log_p_free_gt, t.free_axes)
    log_inner = t.log_p_s + (s_col + rho) * log_first + _scaled(1.0 - s_col, log_second)
    return -rho * t.rate_g_free + _negative_log_total(log_inner, t.sum_axes)


def batch_objective_id_d(query: ExponentQuery, s: np.ndarray) -> np.ndarray:
    t = query.tensors
    s_col = t.column(s)
    log_inner = t.log_p_all_g + _scaled(s_col, t.log_v_g) + _scaled(1.0 - s_col, t.log_v_gt)
    return _negative_log_total(log_inner, t.sum_axes)


def _require_kind(query: ExponentQuery, kind: ExponentKind) -> None:
    if query.kind is not kind:
        raise DomainError(f"query kind is {query.kind.value}, expected {kind.value}")


def _check_rho(rho: float) -> None:
    if not 0 < rho <= 1:
        raise DomainError(f"rho must satisfy 0 < rho <= 1, got {rho}")


def objective_md(query: ExponentQuery, rho: float, s: float) -> float:
    """Wrong-message objective at (rho, s)"""
    _require_kind(query, ExponentKind.MD)
    _check_rho(rho)
    if not 0 <= s <= 1:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    return float(batch_objective_md(query, rho, np.array([s]))[0])


def objective_id_s(query: ExponentQuery, rho: float, s: float) -> float:
    """Region/out-of-region objective at (rho, s) with s <= 1 - rho"""
    _require_kind(query, ExponentKind.ID_S)
    _check_rho(rho)
    if not 0 <= s <= 1 - rho + DOMAIN_TOLERANCE:
        raise DomainError(f"s must lie in [0, 1 - rho] = [0, {1 - rho:.12g}], got {s}")
    return float(batch_objective_id_s(query, rho, np.array([s]))[0])


def objective_id_d(query: ExponentQuery, s: float) -> float:
    """Misdetection objective at s (a weighted Chernoff divergence)"""
    _require_kind(query, ExponentKind.ID_D)
    if not 0 <= s <= 1:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    return float(batch_objective_id_d(query, np.array([s]))[0])


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10) -> Tuple[float, float, int]:
    """Golden-section search for a maximum of f on [a, b]

    Returns the best evaluated point, its value and the number of
    evaluations. For non-unimodal f the result is still a feasible point.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x), 1

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    best_x, best_y = (c, yc) if yc >= yd else (d, yd)
    evaluations = 2

    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
            x, y = c, yc
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
            x, y = d, yd
        evaluations += 1
        if y > best_y:
            best_x, best_y = x, y
    return best_x, best_y, evaluations


@dataclass(frozen=True)
class ExponentOptimizer:
    """Dense grid over the admissible (rho, s) set followed by coordinate refinement"""
    grid_points: int = 101
    refine_rounds: int = 3
    rho_floor: float = 1e-6
    tolerance: float = 1e-10
    threads: int = 1

    def __post_init__(self):
        if self.grid_points < 2:
            raise DomainError("optimizer grid needs at least 2 points")
        if not 0 < self.rho_floor < 1:
            raise DomainError("rho floor must lie in (0, 1)")

    @classmethod
    def from_config(cls, config) -> 'ExponentOptimizer':
        return cls(
            grid_points=config.GRID_POINTS,
            refine_rounds=config.REFINE_ROUNDS,
            rho_floor=config.RHO_FLOOR,
            tolerance=config.GOLDEN_TOLERANCE,
            threads=config.THREADS,
        )

    def settings(self) -> Dict[str, float]:
        return {
            'grid_points': self.grid_points,
            'refine_rounds': self.refine_rounds,
            'rho_floor': self.rho_floor,
            'tolerance': self.tolerance,
        }

    def maximize(self, query: ExponentQuery) -> ExponentReport:
        if query.kind is ExponentKind.ID_D:
            return self._maximize_s_only(query)
        return self._maximize_rho_s(query)

    def _maximize_s_only(self, query: ExponentQuery) -> ExponentReport:
        grid = np.linspace(0.0, 1.0, self.grid_points)
        values = batch_objective_id_d(query, grid)
        evaluations = grid.size
        best = int(np.argmax(values))
        s_best, v_best = float(grid[best]), float(values[best])

        step = 1.0 / (self.grid_points - 1)
        objective = lambda s: float(batch_objective_id_d(query, np.array([s]))[0])  # noqa: E731
        for _ in range(self.refine_rounds):
            s, v, count = golden_section_max(
                objective, max(0.0, s_best - step), min(1.0, s_best + step), self.tolerance
            )
            evaluations += count
            if v > v_best:
                s_best, v_best = s, v

        value = objective_id_d(query, s_best)
        return ExponentReport(
            kind=query.kind.value, value=value, arg_rho=None, arg_s=s_best,
            evaluations=evaluations, refinement_iterations=self.refine_rounds,
        )

    def _s_limit(self, query: ExponentQuery, rho: float) -> float:
        return 1.0 - rho if query.kind is ExponentKind.ID_S else 1.0

    def _batch(self, query: ExponentQuery, rho: float, s: np.ndarray) -> np.ndarray:
        if query.kind is ExponentKind.MD:
            return batch_objective_md(query, rho, s)
        return batch_objective_id_s(query, rho, s)

    def _maximize_rho_s(self, query: ExponentQuery) -> ExponentReport:
        rho_grid = np.linspace(self.rho_floor, 1.0, self.grid_points)
        fractions = np.linspace(0.0, 1.0, self.grid_points)

        def row(rho: float) -> Tuple[float, float]:
            s_row = fractions * self._s_limit(query, rho)
            values = self._batch(query, rho, s_row)
            j = int(np.argmax(values))
            return float(s_row[j]), float(values[j])

        # touch the lazily built tensors before fanning out
        query.tensors
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                rows = list(pool.map(row, rho_grid))
        else:
            rows = [row(rho) for rho in rho_grid]
        evaluations = self.grid_points * self.grid_points

        i = int(np.argmax([v for _, v in rows]))
        rho_best, (s_best, v_best) = float(rho_grid[i]), rows[i]

        def at(rho: float, s: float) -> float:
            return float(self._batch(query, rho, np.array([s]))[0])

        rho_step = (1.0 - self.rho_floor) / (self.grid_points - 1)
        s_step = 1.0 / (self.grid_points - 1)
        for _ in range(self.refine_rounds):
            rho_high = min(1.0, 1.0 - s_best) if query.kind is ExponentKind.ID_S else 1.0
            rho_high = max(rho_high, self.rho_floor)
            rho, v, count = golden_section_max(
                lambda r: at(r, s_best),
                max(self.rho_floor, rho_best - rho_step), min(rho_high, rho_best + rho_step),
                self.tolerance,
            )
            evaluations += count
            if v > v_best:
                rho_best, v_best = rho, v

            s_high = self._s_limit(query, rho_best)
            s, v, count = golden_section_max(
                lambda x: at(rho_best, x),
                max(0.0, s_best - s_step), min(s_high, s_best + s_step),
                self.tolerance,
            )
            evaluations += count
            if v > v_best:
                s_best, v_best = s, v

        if query.kind is ExponentKind.MD:
            value = objective_md(query, rho_best, s_best)
        else:
            value = objective_id_s(query, rho_best, s_best)
        at_floor = rho_best <= self.rho_floor * (1 + 1e-9)
        if at_floor:
            logger.debug(f"Exponent {query.kind.value} maximizer sits on the rho floor {self.rho_floor}")
        return ExponentReport(
            kind=query.kind.value, value=value, arg_rho=rho_best, arg_s=s_best,
            evaluations=evaluations, refinement_iterations=self.refine_rounds,
            at_rho_floor=at_floor,
        )


def maximize(query: ExponentQuery, optimizer: Optional[ExponentOptimizer] = None) -> ExponentReport:
    """Maximize the query's objective over its admissible (rho, s) set"""
    return (optimizer or ExponentOptimizer()).maximize(query)


def gallager_e0(transition: np.ndarray, input_dist, rho: float) -> float:
    """Single-user E0(rho) = -log sum_y (sum_x P(x) W(y|x)^(1/(1+rho)))^(1+rho)"""
    transition = np.asarray(transition, dtype=float)
    input_dist = np.asarray(input_dist, dtype=float)
    inner = (input_dist[:, None] * transition ** (1.0 / (1.0 + rho))).sum(axis=0)
    return float(-np.log((inner ** (1.0 + rho)).sum()))


class ExponentCache:
    """Thread-safe memo of exponent reports with optional JSON persistence

    Keys combine a context digest (channel, ensemble, optimizer settings) with
    the exact query fields. Concurrent first fills of one key store identical
    values, so the first writer wins.
    """

    FILENAME = 'exponents.json'

    def __init__(self, maxsize: int = Config.CACHE_SIZE, directory: Optional[str] = None):
        self._cache: LRUCache = LRUCache(maxsize=maxsize)
        self._lock = threading.Lock()
        self.directory = directory
        self.hits = 0
        self.misses = 0
        if directory:
            self.load()

    @staticmethod
    def context_key(channel: ChannelModel, ensemble: CodeEnsembleVector,
                    optimizer: ExponentOptimizer) -> str:
        return f"{channel.digest()}:{ensemble.digest()}:{json.dumps(optimizer.settings(), sort_keys=True)}"

    @staticmethod
    def _key(context: str, query: ExponentQuery) -> str:
        return json.dumps([context, list(query.cache_key())])

    def __len__(self) -> int:
        return len(self._cache)

    def get_or_compute(self, context: str, query: ExponentQuery,
                       optimizer: ExponentOptimizer) -> ExponentReport:
        key = self._key(context, query)
        with self._lock:
            report = self._cache.get(key)
            if report is not None:
                self.hits += 1
                return report
            self.misses += 1

        report = optimizer.maximize(query)
        with self._lock:
            existing = self._cache.get(key)
            if existing is not None:
                return existing
            self._cache[key] = report
        return report

    def path(self) -> Optional[str]:
        return os.path.join(self.directory, self.FILENAME) if self.directory else None

    def load(self) -> int:
        path = self.path()
        if not path or not os.path.exists(path):
            return 0
        try:
            with open(path, 'r', encoding='utf-8') as f:
                stored = json.load(f)
        except (OSError, ValueError) as e:
            logger.warning(f"Ignoring unreadable exponent cache {path}: {e}")
            return 0
        with self._lock:
            for key, data in stored.items():
                self._cache[key] = ExponentReport.from_dict(data)
        logger.info(f"Loaded {len(stored)} cached exponent(s) from {path}")
        return len(stored)

    def save(self) -> Optional[str]:
        path = self.path()
        if not path:
            return None
        os.makedirs(self.directory, exist_ok=True)
        with self._lock:
            stored = {key: report.to_dict() for key, report in self._cache.items()}
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(stored, f, indent=2, sort_keys=True)
        logger.info(f"Saved {len(stored)} exponent(s) to {path}")
        return path
