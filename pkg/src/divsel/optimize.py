"""Greedy subset selection, adaptive-bandwidth GILD greedy, relevance-diversity
reranking, and an exact brute-force oracle for small instances.

Determinism contract: ties in every argmax are broken toward the lowest item
id, and singletons score 0 (objectives are undefined below 2 items), so the
first plain-greedy pick is always the lowest candidate id. Selections for a
larger k extend those for a smaller k (prefix property).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .distance import DistanceOracle
from .objectives import (
    SQRT2,
    ObjectiveSpec,
    ObjectiveValue,
    adjusted_sigma_from_distances,
    bandwidth_divisor,
    gild_from_distances,
    kernel_distance_arr,
)
from .util import BudgetExceededError

_CHUNK = 256  # candidate rows per block in the adaptive-GILD inner loop


def _kernel_matrix(d: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Rowwise kernel distances at per-row bandwidths.

    sigma = 0 rows (possible on pseudometric catalogs with duplicates) take
    the one-sided limit: sqrt(2) for d > 0, 0 at d = 0.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (d * d) / (2.0 * sigma * sigma)[:, None]
    u = np.nan_to_num(u, nan=0.0, posinf=np.inf)
    return np.where(u > 700.0, SQRT2, np.sqrt(-2.0 * np.expm1(-np.minimum(u, 700.0))))


@dataclass(frozen=True)
class SelectionStep:
    """One greedy step: chosen item, maximized marginal, resulting value.

    ``value`` is the diversity objective of the prefix after the step (0 while
    undefined). For reranking, ``gain`` is the combined relevance-diversity
    score and the two components are recorded separately.
    """

    item: int
    gain: float
    value: float
    sigma: float | None = None
    relevance: float | None = None
    diversity_gain: float | None = None
    ties: int = 1  # candidates sharing the maximized score at this step


@dataclass(frozen=True)
class Selection:
    items: tuple[int, ...]
    objective: ObjectiveSpec
    trace: tuple[SelectionStep, ...]

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError("selection contains duplicate items")
        if len(self.trace) != len(self.items):
            raise ValueError("trace length must equal selection length")


@dataclass(frozen=True)
class RerankConfig:
    """Relevance scores, trade-off lam in [0, 1], diversity objective, size k.

    Non-finite relevance marks excluded items (-inf masking); such items are
    never selected, at any lam.
    """

    relevance: np.ndarray
    lam: float
    objective: ObjectiveSpec
    k: int

    def __post_init__(self):
        object.__setattr__(self, "relevance", np.asarray(self.relevance, dtype=np.float64))
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class BruteForceResult:
    optimum_value: float
    one_optimal_set: tuple[int, ...]
    all_optimal_sets: tuple[tuple[int, ...], ...] | None = None
    truncated: bool = False


def _candidate_array(oracle: DistanceOracle, candidates) -> np.ndarray:
    if candidates is None:
        return np.arange(oracle.n, dtype=np.intp)
    cand = np.unique(np.asarray(list(candidates), dtype=np.intp))
    if cand.size and (cand[0] < 0 or cand[-1] >= oracle.n):
        raise IndexError(f"candidate ids out of range [0, {oracle.n})")
    return cand


def _masked_argmax(values: np.ndarray, alive: np.ndarray) -> tuple[int, int]:
    """Position of the maximum among alive entries and the count of exact ties.

    The first position wins, which is the lowest item id (candidate arrays
    are ascending).
    """
    masked = np.where(alive, values, -np.inf)
    pos = int(np.argmax(masked))
    return pos, int(np.count_nonzero(masked == masked[pos]))


class _DiversityState:
    """Incremental marginal bookkeeping for one objective over a candidate pool.

    Candidates are a fixed ascending id array; selected items are tracked by
    position. gains() returns the marginal f(S + {i}) - f(S) per candidate
    (objectives treated as 0 while undefined), values() the objective value
    of S + {i}.
    """

    def __init__(self, oracle: DistanceOracle, spec: ObjectiveSpec, cand: np.ndarray):
        self.oracle = oracle
        self.spec = spec
        self.cand = cand
        self.size = 0
        self.current = 0.0  # objective value of the selected prefix, or_zero
        if spec.kind in ("ild", "gild") and not spec.adaptive:
            self._sums = np.zeros(cand.size, dtype=np.float64)
            self._pairsum = 0.0
        elif spec.kind == "disp":
            self._mind = np.full(cand.size, np.inf)
        else:  # adaptive gild
            self._sel_dist = np.empty((cand.size, 0), dtype=np.float64)
            self._base_pair = np.empty(0, dtype=np.float64)
            self._gain_cache: tuple[int, np.ndarray] | None = None

    # -- value/gain computation over all candidates ------------------------

    def values(self) -> np.ndarray:
        """Objective value of S + {i} for every candidate position i."""
        ell = self.size + 1
        if ell == 1:
            return np.zeros(self.cand.size, dtype=np.float64)
        if self.spec.adaptive:
            raise ValueError("adaptive GILD has no per-candidate value; use gains()")
        if self.spec.kind == "disp":
            return np.minimum(self.current if self.size >= 2 else np.inf, self._mind)
        return (self._pairsum + self._sums) / math.comb(ell, 2)

    def gains(self) -> np.ndarray:
        ell = self.size + 1
        if ell == 1:
            return np.zeros(self.cand.size, dtype=np.float64)
        if self.spec.adaptive:
            return self._adaptive_gains()
        return self.values() - self.current

    def _adaptive_gains(self) -> np.ndarray:
        """Marginals for adaptive GILD at step ell = size + 1 >= 2.

        The bandwidth is recomputed per candidate from the pairwise distances
        of S + {i}; both GILD terms of the marginal use that bandwidth. At
        ell = 2 the bandwidth formula degenerates and the marginal is its
        sigma -> 0+ limit, sqrt(2) for any non-duplicate item.
        """
        ell = self.size + 1
        if self._gain_cache is not None and self._gain_cache[0] == self.size:
            return self._gain_cache[1]
        if ell == 2:
            out = np.where(self._sel_dist[:, 0] > 0.0, SQRT2, 0.0)
            self._gain_cache = (self.size, out)
            return out
        divisor = bandwidth_divisor(ell)
        base = self._base_pair
        p = base.size
        new_pairs = math.comb(ell, 2)
        old_pairs = math.comb(ell - 1, 2)
        out = np.empty(self.cand.size, dtype=np.float64)
        for start in range(0, self.cand.size, _CHUNK):
            rows = slice(start, min(start + _CHUNK, self.cand.size))
            d_sel = self._sel_dist[rows]
            merged = np.concatenate(
                [np.broadcast_to(base, (d_sel.shape[0], p)), d_sel], axis=1
            )
            if self.spec.scheme == "adjusted_min":
                sigma = merged.min(axis=1) / divisor
            else:
                sigma = np.median(merged, axis=1) / divisor
            kern = _kernel_matrix(merged, sigma)
            out[rows] = kern.sum(axis=1) / new_pairs - (
                kern[:, :p].sum(axis=1) / old_pairs if old_pairs else 0.0
            )
        self._gain_cache = (self.size, out)
        return out

    def sigma_for(self, pos: int) -> float | None:
        """Bandwidth the adaptive marginal used for candidate position pos."""
        if not self.spec.adaptive or self.size + 1 < 3:
            return None
        merged = np.concatenate([self._base_pair, self._sel_dist[pos]])
        return adjusted_sigma_from_distances(merged, self.size + 1, self.spec.scheme)

    # -- state update -------------------------------------------------------

    def add(self, pos: int) -> None:
        """Commit candidate position pos to the selection."""
        ell = self.size + 1
        new_dist = self.oracle.pair_distances(int(self.cand[pos]), self.cand)
        if self.spec.kind == "disp":
            if ell >= 2:
                self.current = float(min(self.current if ell > 2 else np.inf,
                                         self._mind[pos]))
            self._mind = np.minimum(self._mind, new_dist)
        elif not self.spec.adaptive:
            if ell >= 2:
                self.current = (self._pairsum + self._sums[pos]) / math.comb(ell, 2)
            self._pairsum += self._sums[pos]
            if self.spec.kind == "ild":
                self._sums += new_dist
            else:
                self._sums += kernel_distance_arr(new_dist, self.spec.sigma)
        else:
            self._base_pair = np.concatenate([self._base_pair, self._sel_dist[pos]])
            self._sel_dist = np.concatenate([self._sel_dist, new_dist[:, None]], axis=1)
            self._gain_cache = None
            # value of the new prefix at the bandwidth of the new prefix;
            # undefined (0) at ell = 2 where the bandwidth degenerates
            if ell >= 3:
                sigma = adjusted_sigma_from_distances(self._base_pair, ell, self.spec.scheme)
                kern = _kernel_matrix(self._base_pair[None, :], np.array([sigma]))
                self.current = float(kern.sum()) / math.comb(ell, 2)
        self.size = ell


def greedy(oracle: DistanceOracle, objective: ObjectiveSpec, k: int,
           candidates=None) -> Selection:
    """Greedy maximization: step ell adds the item maximizing f(S + {i}).

    For dispersion this reduces to farthest-point traversal. Adaptive-GILD
    specs are dispatched to :func:`greedy_gild_adaptive`.
    """
    if objective.adaptive:
        return greedy_gild_adaptive(oracle, objective.scheme, k, candidates=candidates)
    cand = _candidate_array(oracle, candidates)
    if not 2 <= k <= cand.size:
        raise ValueError(f"k out of range: need 2 <= k <= {cand.size}, got {k}")
    state = _DiversityState(oracle, objective, cand)
    alive = np.ones(cand.size, dtype=bool)
    items, trace = [], []
    for _ in range(k):
        values = state.values()
        pos, ties = _masked_argmax(values, alive)
        gain = float(values[pos] - state.current)
        state.add(pos)
        alive[pos] = False
        items.append(int(cand[pos]))
        trace.append(SelectionStep(item=items[-1], gain=gain, value=state.current,
                                   ties=ties))
    return Selection(tuple(items), objective, tuple(trace))


def _farthest_pair(oracle: DistanceOracle, cand: np.ndarray) -> tuple[int, int]:
    """Lexicographically smallest candidate pair attaining the max distance."""
    best = -np.inf
    best_pair = (int(cand[0]), int(cand[1]))
    for t in range(cand.size - 1):
        row = oracle.pair_distances(int(cand[t]), cand[t + 1:])
        pos = int(np.argmax(row))
        if row[pos] > best:
            best = float(row[pos])
            best_pair = (int(cand[t]), int(cand[t + 1 + pos]))
    return best_pair


def greedy_gild_adaptive(oracle: DistanceOracle, scheme: str, k: int,
                         candidates=None, exact_pair: bool = False) -> Selection:
    """Greedy GILD with the bandwidth recomputed per candidate set.

    Steps 1-2 realize the k = 2 special case (the bandwidth formula is
    degenerate there): the lowest-index item, then the item farthest from it;
    with ``exact_pair`` the globally farthest pair instead. Later steps score
    each candidate i by GILD(S + {i}) - GILD(S) at the adjusted-min/median
    bandwidth of S + {i}, recording the chosen bandwidth in the trace.
    """
    if scheme not in ("adjusted_min", "adjusted_med"):
        raise ValueError(f"scheme must be adjusted_min or adjusted_med, got {scheme!r}")
    spec = ObjectiveSpec("gild", scheme=scheme)
    cand = _candidate_array(oracle, candidates)
    if not 2 <= k <= cand.size:
        raise ValueError(f"k out of range: need 2 <= k <= {cand.size}, got {k}")
    state = _DiversityState(oracle, spec, cand)
    alive = np.ones(cand.size, dtype=bool)
    items, trace = [], []

    def commit(pos: int, gain: float, sigma: float | None, ties: int = 1) -> None:
        state.add(pos)
        alive[pos] = False
        items.append(int(cand[pos]))
        trace.append(SelectionStep(item=items[-1], gain=gain, value=state.current,
                                   sigma=sigma, ties=ties))

    if exact_pair:
        first, second = _farthest_pair(oracle, cand)
        pos1 = int(np.searchsorted(cand, first))
        commit(pos1, 0.0, None)
        pos2 = int(np.searchsorted(cand, second))
        commit(pos2, float(oracle.distance(first, second)), None)
    else:
        commit(0, 0.0, None, ties=cand.size)
        dist0 = oracle.pair_distances(items[0], cand)
        pos2, ties2 = _masked_argmax(dist0, alive)
        commit(pos2, float(dist0[pos2]), None, ties=ties2)

    for _ in range(2, k):
        gains = state.gains()
        pos, ties = _masked_argmax(gains, alive)
        commit(pos, float(gains[pos]), state.sigma_for(pos), ties=ties)
    return Selection(tuple(items), spec, tuple(trace))


def greedy_rerank(oracle: DistanceOracle, config: RerankConfig,
                  candidates=None) -> Selection:
    """Greedy maximization of (1-lam) * rel(i) + lam * marginal diversity.

    lam = 0 is top-k by relevance (ties to the lowest id); lam = 1 reproduces
    the pure diversity greedy. Items with non-finite relevance (masked) are
    excluded outright.
    """
    cand = _candidate_array(oracle, candidates)
    rel_all = config.relevance
    if rel_all.shape != (oracle.n,):
        raise ValueError(f"relevance must have shape ({oracle.n},), got {rel_all.shape}")
    cand = cand[np.isfinite(rel_all[cand])]
    if not 1 <= config.k <= cand.size:
        raise ValueError(
            f"k out of range: need 1 <= k <= {cand.size} unmasked candidates, got {config.k}"
        )
    rel = rel_all[cand]
    lam = config.lam
    state = _DiversityState(oracle, config.objective, cand)
    alive = np.ones(cand.size, dtype=bool)
    items, trace = [], []
    for _ in range(config.k):
        div_gain = state.gains()
        scores = (1.0 - lam) * rel + lam * div_gain
        pos, ties = _masked_argmax(scores, alive)
        this_sigma = state.sigma_for(pos) if config.objective.adaptive else None
        state.add(pos)
        alive[pos] = False
        items.append(int(cand[pos]))
        trace.append(SelectionStep(
            item=items[-1], gain=float(scores[pos]), value=state.current,
            sigma=this_sigma, relevance=float(rel[pos]),
            diversity_gain=float(div_gain[pos]), ties=ties,
        ))
    return Selection(tuple(items), config.objective, tuple(trace))


def _subset_value(pair_vector: np.ndarray, k: int, spec: ObjectiveSpec) -> float:
    if spec.kind == "ild":
        return float(pair_vector.sum()) / math.comb(k, 2)
    if spec.kind == "disp":
        return float(pair_vector.min())
    if spec.scheme == "fixed":
        sigma = spec.sigma
    else:
        sigma = adjusted_sigma_from_distances(pair_vector, k, spec.scheme)
    return gild_from_distances(pair_vector, sigma)


def brute_force(oracle: DistanceOracle, objective: ObjectiveSpec, k: int,
                enumerate_all_optima: bool = False, budget: int = 2_000_000,
                optima_cap: int = 100_000) -> BruteForceResult:
    """Exact optimum over all size-k subsets, by lexicographic enumeration.

    Values within 1e-12 of the maximum are treated as co-optimal (floating
    ties are real in the adversarial constructions). ``one_optimal_set`` is
    the first subset attaining the exact maximum.
    """
    n = oracle.n
    if not 2 <= k <= n:
        raise ValueError(f"k out of range: need 2 <= k <= {n}, got {k}")
    total = math.comb(n, k)
    if total > budget:
        raise BudgetExceededError(
            f"C({n},{k}) = {total} subsets exceeds budget {budget}"
        )
    dense = oracle.submatrix(np.arange(n))
    iu = np.triu_indices(k, 1)
    tol = 1e-12
    best = -np.inf
    best_set: tuple[int, ...] | None = None
    co_optima: list[tuple[tuple[int, ...], float]] = []
    truncated = False
    for subset in combinations(range(n), k):
        idx = np.asarray(subset, dtype=np.intp)
        value = _subset_value(dense[np.ix_(idx, idx)][iu], k, objective)
        if value > best:
            best = value
            best_set = subset
            if enumerate_all_optima:
                co_optima = [(s, v) for (s, v) in co_optima if v >= best - tol]
        if enumerate_all_optima and value >= best - tol:
            if len(co_optima) < optima_cap:
                co_optima.append((subset, value))
            else:
                truncated = True
    all_sets = None
    if enumerate_all_optima:
        all_sets = tuple(s for (s, v) in co_optima if v >= best - tol)
    return BruteForceResult(
        optimum_value=float(best),
        one_optimal_set=best_set,
        all_optimal_sets=all_sets,
        truncated=truncated,
    )
