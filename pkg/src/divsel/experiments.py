"""Empirical methodology: relative scores between objectives, the bandwidth
sweep, pairwise-distance histograms, and recommendation evaluation
(nDCG / normalized ILD / normalized dispersion).

All reports are plain data with ``to_json_dict`` plus flat-CSV writers, and
are deterministic given the seed set. Undefined cells (no pairs, degenerate
bandwidth, zero normalizer) are carried as NaN internally and emitted as
null; averages skip them and report how many were skipped.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .dataio import FeedbackMatrix
from .distance import DistanceOracle
from .objectives import (
    DISP_SPEC,
    ILD_SPEC,
    ObjectiveSpec,
    adjusted_sigma_from_distances,
    bandwidth_divisor,
    gild_from_distances,
)
from .optimize import RerankConfig, Selection, greedy, greedy_rerank
from .relevance import EaseModel, score_users
from .util import format_float, ordered_map, rng_for

DEFAULT_LAMBDAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 0.999, 1.0)
DEFAULT_OBJECTIVES = (ILD_SPEC, DISP_SPEC, ObjectiveSpec("gild", scheme="adjusted_med"))
_ZERO_DENOM = 1e-12


def prefix_values(oracle: DistanceOracle, items, spec: ObjectiveSpec) -> np.ndarray:
    """Objective value of every prefix of an ordered selection.

    Returns an array indexed by prefix size 0..len(items); entries where the
    objective is undefined (size < 2, or adjusted-bandwidth GILD at size 2)
    are NaN.
    """
    items = np.asarray(list(items), dtype=np.intp)
    size = items.size
    out = np.full(size + 1, np.nan)
    if size < 2:
        return out
    sub = oracle.submatrix(items)
    if spec.kind == "ild":
        running = 0.0
        for k in range(2, size + 1):
            running += float(sub[k - 1, :k - 1].sum())
            out[k] = running / math.comb(k, 2)
    elif spec.kind == "disp":
        current = np.inf
        for k in range(2, size + 1):
            current = min(current, float(sub[k - 1, :k - 1].min()))
            out[k] = current
    else:
        chunks = []
        for k in range(2, size + 1):
            chunks.append(sub[k - 1, :k - 1])
            vec = np.concatenate(chunks)
            if spec.scheme == "fixed":
                out[k] = gild_from_distances(vec, spec.sigma)
            elif k >= 3:
                sigma = adjusted_sigma_from_distances(vec, k, spec.scheme)
                out[k] = gild_from_distances(vec, sigma)
    return out


def _measure_pairs(pair: np.ndarray, k: int, spec: ObjectiveSpec) -> float:
    """Objective value from a precomputed pair-distance multiset (NaN if undefined)."""
    if spec.kind == "ild":
        return float(pair.mean())
    if spec.kind == "disp":
        return float(pair.min())
    if spec.scheme == "fixed":
        return gild_from_distances(pair, spec.sigma)
    if k < 3:
        return np.nan
    sigma = adjusted_sigma_from_distances(pair, k, spec.scheme)
    return gild_from_distances(pair, sigma)


@dataclass(frozen=True)
class RelativeScoreReport:
    """Cross-objective empirical approximation factors.

    per_k[f][g][k - 2] is g(greedy_f prefix k) / g(greedy_g prefix k) for
    k = 2..k_max; the Random row averages seeded uniform k-subsets. Scores
    above 1 are kept (greedy denominators are not optima) and counted.
    """

    objective_labels: tuple[str, ...]
    k_max: int
    seed: int
    random_repeats: int
    per_k: dict
    averages: dict
    undefined_counts: dict
    above_one_counts: dict
    random_per_k: dict
    random_variance: dict
    random_averages: dict

    def to_json_dict(self) -> dict:
        def clean(seq):
            return [None if isinstance(v, float) and math.isnan(v) else v for v in seq]
        return {
            "objectives": list(self.objective_labels),
            "k_max": self.k_max,
            "seed": self.seed,
            "random_repeats": self.random_repeats,
            "per_k": {f: {g: clean(v) for g, v in row.items()}
                      for f, row in self.per_k.items()},
            "averages": self.averages,
            "undefined_counts": self.undefined_counts,
            "above_one_counts": self.above_one_counts,
            "random_per_k": {g: clean(v) for g, v in self.random_per_k.items()},
            "random_variance": {g: clean(v) for g, v in self.random_variance.items()},
            "random_averages": self.random_averages,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["optimized", "measured", "k", "score"])
            for f, row in self.per_k.items():
                for g, series in row.items():
                    for k, score in enumerate(series, start=2):
                        writer.writerow(
                            [f, g, k, "" if math.isnan(score) else format_float(score)])
            for g, series in self.random_per_k.items():
                for k, score in enumerate(series, start=2):
                    writer.writerow(
                        ["random", g, k, "" if math.isnan(score) else format_float(score)])


def _nan_div(num: float, den: float) -> float:
    if math.isnan(num) or math.isnan(den) or abs(den) <= _ZERO_DENOM:
        return np.nan
    return num / den


def relative_scores(oracle: DistanceOracle, objectives=DEFAULT_OBJECTIVES,
                    k_max: int = 128, seed: int = 0,
                    random_repeats: int = 10) -> RelativeScoreReport:
    """Each objective's greedy prefix measured under every other objective.

    One greedy run per objective provides all k via the prefix property, per
    the methodology this mirrors. The denominator is the measuring
    objective's own greedy prefix (never the exact optimum).
    """
    if not 2 <= k_max <= oracle.n:
        raise ValueError(f"k_max out of range: need 2 <= k_max <= {oracle.n}")
    specs = list(objectives)
    labels = [s.label() for s in specs]
    selections = {lab: greedy(oracle, spec, k_max) for lab, spec in zip(labels, specs)}
    # values[f][g][k] = g measured on greedy_f's k-prefix
    values = {
        f: {g: prefix_values(oracle, selections[f].items, g_spec)
            for g, g_spec in zip(labels, specs)}
        for f in labels
    }
    ks = range(2, k_max + 1)
    per_k, averages, undefined, above_one = {}, {}, {}, {}
    for f in labels:
        per_k[f], averages[f], undefined[f], above_one[f] = {}, {}, {}, {}
        for g in labels:
            series = [_nan_div(values[f][g][k], values[g][g][k]) for k in ks]
            arr = np.asarray(series)
            finite = arr[~np.isnan(arr)]
            per_k[f][g] = series
            averages[f][g] = float(finite.mean()) if finite.size else None
            undefined[f][g] = int(np.isnan(arr).sum())
            above_one[f][g] = int((finite > 1.0).sum())

    rand_values = {g: np.full((random_repeats, k_max + 1), np.nan) for g in labels}
    for rep in range(random_repeats):
        rng = rng_for(seed, f"relative-random-{rep}")
        for k in ks:
            subset = np.sort(rng.choice(oracle.n, size=k, replace=False))
            pair = oracle.pairwise(subset)
            for g, g_spec in zip(labels, specs):
                rand_values[g][rep, k] = _measure_pairs(pair, k, g_spec)
    random_per_k, random_var, random_avg = {}, {}, {}
    for g, g_spec in zip(labels, specs):
        scores = np.full((random_repeats, k_max + 1), np.nan)
        for rep in range(random_repeats):
            for k in ks:
                scores[rep, k] = _nan_div(rand_values[g][rep, k], values[g][g][k])
        with np.errstate(invalid="ignore"):
            mean_k = np.nanmean(scores[:, 2:], axis=0)
            var_k = np.nanvar(scores[:, 2:], axis=0)
        random_per_k[g] = mean_k.tolist()
        random_var[g] = var_k.tolist()
        finite = mean_k[~np.isnan(mean_k)]
        random_avg[g] = float(finite.mean()) if finite.size else None

    return RelativeScoreReport(
        objective_labels=tuple(labels), k_max=k_max, seed=seed,
        random_repeats=random_repeats, per_k=per_k, averages=averages,
        undefined_counts=undefined, above_one_counts=above_one,
        random_per_k=random_per_k, random_variance=random_var,
        random_averages=random_avg,
    )


@dataclass(frozen=True)
class SigmaSweepReport:
    """Fixed-bandwidth greedy selections across a sigma grid.

    Per grid point: the ILD and dispersion of the selection, plus a flag for
    the underflow-degenerate regime (most candidates tied at some step, so
    the outcome is tie-rule order). Markers are the adaptive run's adjusted
    and raw min/median bandwidths; reference values come from the pure ILD
    and dispersion greedy runs.
    """

    k: int
    sigma_grid: tuple[float, ...]
    ild_values: tuple[float, ...]
    disp_values: tuple[float, ...]
    degenerate: tuple[bool, ...]
    ild_greedy_ild: float
    ild_greedy_disp: float
    disp_greedy_ild: float
    disp_greedy_disp: float
    marker_adjusted_min: float
    marker_adjusted_med: float
    marker_raw_min: float
    marker_raw_med: float

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "sigma_grid": list(self.sigma_grid),
            "ild_values": list(self.ild_values),
            "disp_values": list(self.disp_values),
            "degenerate": list(self.degenerate),
            "references": {
                "ild_greedy": {"ild": self.ild_greedy_ild, "disp": self.ild_greedy_disp},
                "disp_greedy": {"ild": self.disp_greedy_ild, "disp": self.disp_greedy_disp},
            },
            "markers": {
                "adjusted_min": self.marker_adjusted_min,
                "adjusted_med": self.marker_adjusted_med,
                "raw_min": self.marker_raw_min,
                "raw_med": self.marker_raw_med,
            },
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sigma", "ild", "disp", "degenerate"])
            for sigma, iv, dv, flag in zip(self.sigma_grid, self.ild_values,
                                           self.disp_values, self.degenerate):
                writer.writerow([format_float(sigma), format_float(iv),
                                 format_float(dv), int(flag)])


def default_sigma_grid(points: int = 64, start: float = 0.02,
                       stop: float = 1.0) -> np.ndarray:
    """Log-spaced bandwidth grid (the sweep's published default)."""
    return np.geomspace(start, stop, points)


def sigma_sweep(oracle: DistanceOracle, k: int, grid=None,
                threads: int = 1) -> SigmaSweepReport:
    grid = default_sigma_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("sigma grid must be positive and strictly increasing")

    def cell(sigma: float):
        sel = greedy(oracle, ObjectiveSpec("gild", scheme="fixed", sigma=float(sigma)), k)
        pair = oracle.pairwise(sel.items)
        n_total = oracle.n
        degenerate = any(
            step.ties * 2 > (n_total - t) for t, step in enumerate(sel.trace) if t >= 2
        )
        return float(pair.mean()), float(pair.min()), degenerate

    cells = ordered_map(cell, grid.tolist(), threads=threads)
    ild_vals, disp_vals, degenerate = zip(*cells)

    sel_ild = greedy(oracle, ILD_SPEC, k)
    sel_disp = greedy(oracle, DISP_SPEC, k)
    pair_ild = oracle.pairwise(sel_ild.items)
    pair_disp = oracle.pairwise(sel_disp.items)

    adaptive = greedy(oracle, ObjectiveSpec("gild", scheme="adjusted_med"), k)
    pair_ad = oracle.pairwise(adaptive.items)
    divisor = bandwidth_divisor(k)
    raw_min = float(pair_ad.min())
    raw_med = float(np.median(pair_ad))

    return SigmaSweepReport(
        k=k,
        sigma_grid=tuple(float(s) for s in grid),
        ild_values=tuple(ild_vals),
        disp_values=tuple(disp_vals),
        degenerate=tuple(degenerate),
        ild_greedy_ild=float(pair_ild.mean()),
        ild_greedy_disp=float(pair_ild.min()),
        disp_greedy_ild=float(pair_disp.mean()),
        disp_greedy_disp=float(pair_disp.min()),
        marker_adjusted_min=raw_min / divisor,
        marker_adjusted_med=raw_med / divisor,
        marker_raw_min=raw_min,
        marker_raw_med=raw_med,
    )


@dataclass(frozen=True)
class HistogramReport:
    """Counts of a selection's pairwise distances in equal-width bins on [0, D]."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    diameter: float

    def to_json_dict(self) -> dict:
        return {
            "bin_edges": list(self.bin_edges),
            "counts": list(self.counts),
            "diameter": self.diameter,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                writer.writerow([format_float(lo), format_float(hi), c])


def pairwise_histogram(oracle: DistanceOracle, items, bins: int = 50) -> HistogramReport:
    """Histogram of all C(|S|,2) pairwise distances over [0, catalog diameter]."""
    items = np.unique(np.asarray(list(items), dtype=np.intp))
    if items.size < 2:
        raise ValueError(f"need at least 2 items, got {items.size}")
    if bins < 1:
        raise ValueError(f"need at least 1 bin, got {bins}")
    diam = oracle.diameter()
    pair = oracle.pairwise(items)
    counts, edges = np.histogram(pair, bins=bins, range=(0.0, diam))
    return HistogramReport(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        diameter=float(diam),
    )


def ndcg(ranked, relevant: set, k: int) -> float:
    """Normalized discounted cumulative gain at cutoff k.

    Gains are 1/log2(rank + 1) for relevant items in the top k; the
    normalizer is the ideal DCG truncated at min(k, |relevant|). Lists
    shorter than k count as non-relevant padding. An empty relevant set
    scores 0 (callers flag that case).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not relevant:
        return 0.0
    ideal = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(relevant)) + 1))
    gain = sum(
        1.0 / math.log2(rank + 1)
        for rank, item in enumerate(list(ranked)[:k], start=1)
        if item in relevant
    )
    return gain / ideal


@dataclass(frozen=True)
class EvalCell:
    objective: str
    lam: float
    mean_ndcg: float
    mean_nild: float | None
    mean_ndisp: float | None
    users: int
    nild_excluded: int
    ndisp_excluded: int


@dataclass(frozen=True)
class EvalReport:
    """Mean nDCG / nILD / ndisp per (objective, lambda) cell.

    Normalizers are per-user greedy diversity maximizers over the user's own
    candidate pool (items outside their train+validation history). Users
    whose dispersion normalizer is ~0 are excluded from the ndisp mean only.
    """

    k: int
    lambdas: tuple[float, ...]
    objective_labels: tuple[str, ...]
    cells: tuple[EvalCell, ...]
    evaluated_users: int
    skipped_users: int
    empty_test_users: int
    per_user: dict

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "lambdas": list(self.lambdas),
            "objectives": list(self.objective_labels),
            "cells": [
                {
                    "objective": c.objective,
                    "lambda": c.lam,
                    "mean_ndcg": c.mean_ndcg,
                    "mean_nild": c.mean_nild,
                    "mean_ndisp": c.mean_ndisp,
                    "users": c.users,
                    "nild_excluded": c.nild_excluded,
                    "ndisp_excluded": c.ndisp_excluded,
                }
                for c in self.cells
            ],
            "evaluated_users": self.evaluated_users,
            "skipped_users": self.skipped_users,
            "empty_test_users": self.empty_test_users,
            "per_user": self.per_user,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["objective", "lambda", "mean_ndcg", "mean_nild",
                             "mean_ndisp", "users", "nild_excluded", "ndisp_excluded"])
            for c in self.cells:
                writer.writerow([
                    c.objective, format_float(c.lam), format_float(c.mean_ndcg),
                    "" if c.mean_nild is None else format_float(c.mean_nild),
                    "" if c.mean_ndisp is None else format_float(c.mean_ndisp),
                    c.users, c.nild_excluded, c.ndisp_excluded,
                ])

    def cell(self, objective: str, lam: float) -> EvalCell:
        for c in self.cells:
            if c.objective == objective and c.lam == lam:
                return c
        raise KeyError(f"no cell for ({objective}, {lam})")


def candidate_pool(train: FeedbackMatrix, validation: FeedbackMatrix,
                   user: int) -> np.ndarray:
    """Items outside the user's train+validation history (their rerank pool)."""
    seen = np.union1d(train.user_items(user), validation.user_items(user))
    return np.setdiff1d(np.arange(train.n), seen)


def eval_rerank(oracle: DistanceOracle, model: EaseModel, train: FeedbackMatrix,
                validation: FeedbackMatrix, test: FeedbackMatrix,
                objectives=DEFAULT_OBJECTIVES, lambdas=DEFAULT_LAMBDAS,
                k: int = 50, threads: int = 1) -> EvalReport:
    """Greedy reranking of every user under each (objective, lambda) cell.

    Per user: pool and normalizer selections as in :func:`candidate_pool`,
    relevance from the trained model with training items masked, nDCG against
    the user's test items. Pools smaller than k shrink the list; pools
    smaller than 2 skip the user.
    """
    sizes = {oracle.n, model.n, train.n, validation.n, test.n}
    if len(sizes) != 1:
        raise ValueError(f"item-count mismatch across inputs: {sorted(sizes)}")
    if len({train.m, validation.m, test.m}) != 1:
        raise ValueError("user-count mismatch across splits")
    specs = list(objectives)
    labels = [s.label() for s in specs]
    lambdas = tuple(float(x) for x in lambdas)

    def one_user(user: int):
        pool = candidate_pool(train, validation, user)
        if pool.size < 2:
            return None
        k_eff = min(k, pool.size)
        relevant = set(test.user_items(user).tolist())
        rel = score_users(model, train, user)
        norm_ild_sel = greedy(oracle, ILD_SPEC, k_eff, candidates=pool)
        norm_disp_sel = greedy(oracle, DISP_SPEC, k_eff, candidates=pool)
        denom_ild = prefix_values(oracle, norm_ild_sel.items, ILD_SPEC)[k_eff]
        denom_disp = prefix_values(oracle, norm_disp_sel.items, DISP_SPEC)[k_eff]
        rows = {}
        for label, spec in zip(labels, specs):
            for lam in lambdas:
                sel = greedy_rerank(
                    oracle, RerankConfig(rel, lam, spec, k_eff), candidates=pool)
                pair = oracle.pairwise(sel.items)
                s_ild = float(pair.mean())
                s_disp = float(pair.min())
                rows[(label, lam)] = (
                    ndcg(sel.items, relevant, k),
                    _nan_div(s_ild, denom_ild),
                    _nan_div(s_disp, denom_disp),
                )
        return rows, not relevant

    results = ordered_map(one_user, range(train.m), threads=threads)

    skipped = sum(1 for r in results if r is None)
    empty_test = sum(1 for r in results if r is not None and r[1])
    evaluated = train.m - skipped
    per_user: dict = {lab: {} for lab in labels}
    cells = []
    for label in labels:
        for lam in lambdas:
            ndcgs, nilds, ndisps = [], [], []
            for r in results:
                if r is None:
                    continue
                nd, ni, nds = r[0][(label, lam)]
                ndcgs.append(nd)
                nilds.append(ni)
                ndisps.append(nds)
            nild_arr = np.asarray(nilds)
            ndisp_arr = np.asarray(ndisps)
            nild_ok = nild_arr[~np.isnan(nild_arr)]
            ndisp_ok = ndisp_arr[~np.isnan(ndisp_arr)]
            cells.append(EvalCell(
                objective=label, lam=lam,
                mean_ndcg=float(np.mean(ndcgs)) if ndcgs else 0.0,
                mean_nild=float(nild_ok.mean()) if nild_ok.size else None,
                mean_ndisp=float(ndisp_ok.mean()) if ndisp_ok.size else None,
                users=len(ndcgs),
                nild_excluded=int(np.isnan(nild_arr).sum()),
                ndisp_excluded=int(np.isnan(ndisp_arr).sum()),
            ))
            per_user[label][format_float(lam)] = {
                "ndcg": ndcgs,
                "nild": [None if math.isnan(v) else v for v in nilds],
                "ndisp": [None if math.isnan(v) else v for v in ndisps],
            }
    return EvalReport(
        k=k, lambdas=lambdas, objective_labels=tuple(labels), cells=tuple(cells),
        evaluated_users=evaluated, skipped_users=skipped,
        empty_test_users=empty_test, per_user=per_user,
    )


def write_json(report, path) -> None:
    """Emit any report's nested JSON form (NaN-free, stable key order)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def selection_to_json_dict(selection: Selection) -> dict:
    return {
        "objective": selection.objective.label(),
        "items": list(selection.items),
        "trace": [
            {
                "item": s.item,
                "gain": s.gain,
                "value": s.value,
                "sigma": s.sigma,
                "relevance": s.relevance,
                "diversity_gain": s.diversity_gain,
                "ties": s.ties,
            }
            for s in selection.trace
        ],
    }
