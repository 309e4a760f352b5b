"""Executable numeric checks of the approximation bounds, the tightness
constructions, and the bandwidth limits of the Gaussian objective.

Each check returns a report whose ``worst_margin`` is the minimum slack over
all asserted inequalities (equalities contribute -|difference|), so
``passed`` is exactly ``worst_margin >= -1e-9``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalogs import FeatureCatalog
from .datagen import gen_claim32, gen_claim33
from .distance import DistanceOracle
from .objectives import DISP_SPEC, ILD_SPEC, SQRT2, dispersion, ild, kernel_distance_arr
from .optimize import brute_force, greedy
from .util import rng_for

MARGIN_TOL = -1e-9
LARGE_SIGMA_TOL = 1e-5
SMALL_SIGMA_TOL = 1e-3


@dataclass(frozen=True)
class TheoremReport:
    name: str
    instances_checked: int
    worst_margin: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "instances_checked": self.instances_checked,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "details": self.details,
        }


def _report(name: str, instances: int, margins, details=None) -> TheoremReport:
    worst = float(min(margins))
    return TheoremReport(
        name=name,
        instances_checked=instances,
        worst_margin=worst,
        passed=worst >= MARGIN_TOL,
        details=details or {},
    )


def worst_dispersion_cooptimum(oracle: DistanceOracle, k: int,
                               budget: int = 2_000_000):
    """Dispersion-optimal k-set minimizing the average-distance objective.

    The approximation inequalities are worst-case over all co-optima, and the
    tightness constructions have many; this picks the adversarial one.
    """
    result = brute_force(oracle, DISP_SPEC, k, enumerate_all_optima=True, budget=budget)
    worst_set, worst_ild = None, np.inf
    for cand in result.all_optimal_sets:
        value = ild(oracle, cand).value
        if value < worst_ild:
            worst_ild = value
            worst_set = cand
    return result.optimum_value, worst_set, worst_ild


def check_theorem_31(oracle: DistanceOracle, k: int,
                     budget: int = 2_000_000) -> TheoremReport:
    """Both approximation inequalities on one brute-forceable instance:

      ILD(S*_disp) / OPT_ILD  >= d*_k / D          (worst co-optimal S*_disp)
      ILD(Gr_disp) / OPT_ILD  >= max(d*_k / 2D, 1/k)
    """
    opt_ild = brute_force(oracle, ILD_SPEC, k, budget=budget).optimum_value
    d_star, _, worst_ild = worst_dispersion_cooptimum(oracle, k, budget=budget)
    diam = oracle.diameter()
    greedy_disp = greedy(oracle, DISP_SPEC, k)
    greedy_ild = ild(oracle, greedy_disp.items).value
    ratio_opt = worst_ild / opt_ild
    ratio_greedy = greedy_ild / opt_ild
    bound_opt = d_star / diam
    bound_greedy = max(d_star / (2.0 * diam), 1.0 / k)
    margins = [ratio_opt - bound_opt, ratio_greedy - bound_greedy]
    return _report("theorem_3_1", 1, margins, details={
        "k": k,
        "opt_ild": opt_ild,
        "opt_disp": d_star,
        "diameter": diam,
        "ratio_opt": ratio_opt,
        "bound_opt": bound_opt,
        "ratio_greedy": ratio_greedy,
        "bound_greedy": bound_greedy,
    })


def random_euclidean_oracle(n: int, seed: int, dim: int = 2,
                            cache: str = "full") -> DistanceOracle:
    """Uniform random points in [0, 1)^dim as a Euclidean test instance."""
    points = rng_for(seed, "verify-instance").random((n, dim))
    return DistanceOracle.from_features(FeatureCatalog(points), "euclidean", cache=cache)


def theorem_31_suite(seed: int = 0, instances: int = 50, n: int = 10,
                     ks=(3, 4, 5), claim32_eps=(0.1, 0.01),
                     claim32_n: int = 8) -> TheoremReport:
    """Theorem 3.1 on a suite of random instances plus the tight construction."""
    margins = []
    checked = 0
    for idx in range(instances):
        oracle = random_euclidean_oracle(n, seed + idx)
        for k in ks:
            margins.append(check_theorem_31(oracle, k).worst_margin)
            checked += 1
    for eps in claim32_eps:
        catalog = gen_claim32(claim32_n, eps)
        oracle = DistanceOracle.from_features(catalog, "euclidean", cache="full")
        margins.append(check_theorem_31(oracle, claim32_n // 2).worst_margin)
        checked += 1
    return _report("theorem_3_1_suite", checked, margins,
                   details={"instances": instances, "n": n, "ks": list(ks)})


def approximation_suite(seed: int = 0, instances: int = 50, n: int = 10,
                        ks=(3, 4, 5)) -> TheoremReport:
    """Greedy 1/2-approximation for both objectives against brute force."""
    margins = []
    checked = 0
    for idx in range(instances):
        oracle = random_euclidean_oracle(n, seed + idx)
        for k in ks:
            for spec in (ILD_SPEC, DISP_SPEC):
                opt = brute_force(oracle, spec, k).optimum_value
                got = greedy(oracle, spec, k).trace[-1].value
                margins.append(got / opt - 0.5)
                checked += 1
    return _report("greedy_half_approximation", checked, margins,
                   details={"instances": instances, "n": n, "ks": list(ks)})


def check_claim_32(n: int, eps: float, k: int | None = None,
                   budget: int = 2_000_000) -> TheoremReport:
    """Tightness of the bounds on the two-cluster construction.

    Asserts: the exact optimum of the average objective matches the closed
    form ((k/2)^2 + 2 C(k/2,2) eps) / C(k,2) and is attained by a balanced
    split; some dispersion-optimal set is a single cluster with average eps;
    greedy on dispersion (lowest-index ties, clusters ordered X first)
    realizes the adversarial value ((k-1) + C(k-1,2) eps) / C(k,2).
    """
    if k is None:
        k = n // 2
    catalog = gen_claim32(n, eps)
    oracle = DistanceOracle.from_features(catalog, "euclidean", cache="full")
    pairs = math.comb(k, 2)
    margins = []

    opt_formula = ((k / 2) ** 2 + 2 * math.comb(k // 2, 2) * eps) / pairs
    bf_ild = brute_force(oracle, ILD_SPEC, k, budget=budget)
    margins.append(-abs(bf_ild.optimum_value - opt_formula))
    half = n // 2
    x_count = sum(1 for i in bf_ild.one_optimal_set if i < half)
    margins.append(-abs(x_count - k / 2))  # balanced split

    d_star, worst_set, worst_ild = worst_dispersion_cooptimum(oracle, k, budget=budget)
    margins.append(-abs(d_star - eps))
    all_x = tuple(range(k))
    bf_disp = brute_force(oracle, DISP_SPEC, k, enumerate_all_optima=True, budget=budget)
    found_all_x = all_x in set(bf_disp.all_optimal_sets)
    margins.append(0.0 if found_all_x else -1.0)
    margins.append(-abs(worst_ild - eps))
    ratio = worst_ild / bf_ild.optimum_value
    margins.append(2.0 * eps - ratio)

    greedy_disp = greedy(oracle, DISP_SPEC, k)
    greedy_ild = ild(oracle, greedy_disp.items).value
    greedy_formula = ((k - 1) + math.comb(k - 1, 2) * eps) / pairs
    margins.append(-abs(greedy_ild - greedy_formula))

    return _report("claim_3_2", 1, margins, details={
        "n": n, "eps": eps, "k": k,
        "opt_ild": bf_ild.optimum_value,
        "opt_ild_formula": opt_formula,
        "opt_disp": d_star,
        "worst_cooptimum_ild": worst_ild,
        "worst_cooptimum": list(worst_set),
        "all_x_is_cooptimal": found_all_x,
        "ratio": ratio,
        "greedy_disp_ild": greedy_ild,
        "greedy_formula": greedy_formula,
    })


def check_claim_33(n: int, k: int | None = None,
                   budget: int = 2_000_000) -> TheoremReport:
    """No-guarantee direction on the duplicated-endpoints line construction.

    Asserts: every exact optimum of the average objective (and the greedy
    one) has dispersion exactly 0, while the optimum dispersion is exactly 1,
    attained by one copy of each distinct value.
    """
    if k is None:
        k = n
    catalog = gen_claim33(n)
    oracle = DistanceOracle.from_features(catalog, "euclidean", cache="full")
    margins = []

    bf_ild = brute_force(oracle, ILD_SPEC, k, enumerate_all_optima=True, budget=budget)
    disp_of_optima = [dispersion(oracle, s).value for s in bf_ild.all_optimal_sets]
    margins.append(-abs(max(disp_of_optima)))

    greedy_ild = greedy(oracle, ILD_SPEC, k)
    margins.append(-abs(dispersion(oracle, greedy_ild.items).value))

    bf_disp = brute_force(oracle, DISP_SPEC, k, budget=budget)
    margins.append(-abs(bf_disp.optimum_value - 1.0))
    # direct argument: one copy of each value 1..n (ids: 0, n/2, then the
    # interior block) attains dispersion exactly 1
    half = n // 2
    distinct = (0, half) + tuple(range(n, 2 * n - 2))
    margins.append(-abs(dispersion(oracle, distinct).value - 1.0))

    return _report("claim_3_3", 1, margins, details={
        "n": n, "k": k,
        "opt_ild": bf_ild.optimum_value,
        "ild_optima_count": len(bf_ild.all_optimal_sets),
        "max_disp_over_ild_optima": max(disp_of_optima),
        "greedy_ild_disp": dispersion(oracle, greedy_ild.items).value,
        "opt_disp": bf_disp.optimum_value,
    })


@dataclass(frozen=True)
class LimitCheckReport:
    """Bandwidth-limit diagnostics for one item set.

    large_ratio is sigma * GILD_sigma(S) / ILD(S), which tends to 1 from
    below as sigma grows. small_ratio is (sqrt(2) - GILD_sigma(S)) divided by
    (sqrt(2) C / (2 C(k,2))) exp(-disp^2 / 2 sigma^2), evaluated in log space;
    it tends to 1 as sigma shrinks. delta is the gap to the second-smallest
    distance (None when all pairs sit at the minimum: degenerate, the small
    ratio is 1 up to an underflowing correction for every sigma).
    """

    sigma_schedule: tuple[float, ...]
    large_ratio: tuple[float, ...]
    small_ratio: tuple[float, ...]
    converged: bool
    degenerate: bool
    delta: float | None
    pairs_at_min: int
    eps_sigma_large: tuple[float, ...]
    eps_sigma_small: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "sigma_schedule": list(self.sigma_schedule),
            "large_ratio": list(self.large_ratio),
            "small_ratio": list(self.small_ratio),
            "converged": self.converged,
            "degenerate": self.degenerate,
            "delta": self.delta,
            "pairs_at_min": self.pairs_at_min,
            "eps_sigma_large": list(self.eps_sigma_large),
            "eps_sigma_small": list(self.eps_sigma_small),
        }


def check_gild_limits(oracle: DistanceOracle, items, sigma_schedule,
                      large_tol: float = LARGE_SIGMA_TOL,
                      small_tol: float = SMALL_SIGMA_TOL) -> LimitCheckReport:
    """Evaluate both bandwidth-limit ratios across a sigma schedule.

    Convergence requires the large-sigma ratio within ``large_tol`` of 1 at
    the largest sigma and the small-sigma ratio within ``small_tol`` at the
    smallest. Requires |S| >= 3 and a positive minimum distance.
    """
    items = np.unique(np.asarray(list(items), dtype=np.intp))
    if items.size < 3:
        raise ValueError(f"need at least 3 items, got {items.size}")
    pair = oracle.pairwise(items)
    disp = float(pair.min())
    if disp <= 0.0:
        raise ValueError("limit check requires a positive minimum distance")
    total_pairs = pair.size
    at_min = pair <= disp * (1.0 + 1e-12)
    count_min = int(at_min.sum())
    above = pair[~at_min]
    delta = float(above.min() - disp) if above.size else None
    degenerate = delta is None
    ild_value = float(pair.mean())

    schedule = tuple(float(s) for s in np.sort(np.asarray(sigma_schedule, dtype=np.float64)))
    large_ratio, small_ratio = [], []
    eps_large, eps_small = [], []
    d_sq = pair * pair
    disp_sq = disp * disp
    for sigma in schedule:
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        gild_value = float(kernel_distance_arr(pair, sigma).mean())
        large_ratio.append(gild_value * sigma / ild_value)
        eps_large.append(float(pair.max()) / sigma)

        # log-space small-sigma ratio: exponents are taken relative to the
        # dominant exp(-disp^2/2s^2) so nothing underflows until negligible
        inv = 1.0 / (2.0 * sigma * sigma)
        rel = np.exp(np.minimum((disp_sq - d_sq) * inv, 0.0))
        kmin_exponent = -disp_sq * inv
        kernel_vals = np.exp(np.maximum(kmin_exponent + (disp_sq - d_sq) * inv, -745.0))
        ratio = float((2.0 / count_min) * (rel / (1.0 + np.sqrt(1.0 - kernel_vals))).sum())
        small_ratio.append(ratio)
        eps_small.append(
            math.exp(max(-((disp + delta) ** 2 - disp_sq) * inv, -745.0)) if not degenerate
            else 0.0
        )

    converged = (
        abs(large_ratio[-1] - 1.0) <= large_tol
        and abs(small_ratio[0] - 1.0) <= small_tol
    )
    return LimitCheckReport(
        sigma_schedule=schedule,
        large_ratio=tuple(large_ratio),
        small_ratio=tuple(small_ratio),
        converged=converged,
        degenerate=degenerate,
        delta=delta,
        pairs_at_min=count_min,
        eps_sigma_large=tuple(eps_large),
        eps_sigma_small=tuple(eps_small),
    )


def gild_limits_suite(seed: int = 0, instances: int = 10, n: int = 10,
                      dim: int = 2) -> TheoremReport:
    """Limit checks on seeded random point sets at the pinned endpoints."""
    margins = []
    for idx in range(instances):
        oracle = random_euclidean_oracle(n, 7919 + seed + idx, dim=dim)
        items = np.arange(n)
        disp = dispersion(oracle, items).value
        diam = oracle.diameter()
        schedule = [0.05 * disp, diam, 1e3 * diam]
        report = check_gild_limits(oracle, items, schedule)
        margins.append(LARGE_SIGMA_TOL - abs(report.large_ratio[-1] - 1.0))
        margins.append(SMALL_SIGMA_TOL - abs(report.small_ratio[0] - 1.0))
    return _report("theorem_5_1_limits", instances, margins,
                   details={"instances": instances, "n": n})


def run_all(seed: int = 0, instances: int = 20, n: int = 10, ks=(3, 4, 5),
            claim32_n: int = 8, claim32_eps=(0.1, 0.01),
            claim33_ns=(4, 10)) -> dict[str, TheoremReport]:
    """Every check at defaults; keys are stable report names."""
    reports = {}
    reports["greedy_half_approximation"] = approximation_suite(
        seed=seed, instances=instances, n=n, ks=ks)
    reports["theorem_3_1"] = theorem_31_suite(
        seed=seed, instances=instances, n=n, ks=ks,
        claim32_eps=claim32_eps, claim32_n=claim32_n)
    for eps in claim32_eps:
        reports[f"claim_3_2_eps_{eps}"] = check_claim_32(claim32_n, eps)
    for cn in claim33_ns:
        reports[f"claim_3_3_n_{cn}"] = check_claim_33(cn)
    reports["theorem_5_1_limits"] = gild_limits_suite(seed=seed)
    return reports
