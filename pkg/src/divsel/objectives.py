"""Distance-based diversity objectives and bandwidth schemes.

ILD(S)    : average pairwise distance.
disp(S)   : minimum pairwise distance.
GILD_s(S) : average Gaussian kernel distance sqrt(2 - 2 exp(-d^2 / 2 s^2)),
            which tends to ILD/s as s -> inf and (after shifting by sqrt(2))
            to a dispersion-driven quantity as s -> 0.

All objectives are functions of the item *set*; inputs are canonicalized to
sorted unique ids so evaluation is permutation invariant bitwise. Sets with
fewer than 2 items have no pairs: values carry defined=False and optimizers
treat them as 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distance import DistanceOracle

SQRT2 = math.sqrt(2.0)
# exp(-u) for u > 700 is below ~1e-304; the kernel is treated as exactly 0
# there and the kernel distance saturates at sqrt(2).
_UNDERFLOW_EXPONENT = 700.0

BANDWIDTH_SCHEMES = ("fixed", "adjusted_min", "adjusted_med")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which diversity objective to compute, with GILD bandwidth choice.

    kind   : 'ild' | 'disp' | 'gild'
    scheme : GILD only; 'fixed' | 'adjusted_min' | 'adjusted_med'
    sigma  : bandwidth for scheme 'fixed' (> 0)
    """

    kind: str
    scheme: str | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ("ild", "disp", "gild"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == "gild":
            if self.scheme not in BANDWIDTH_SCHEMES:
                raise ValueError(f"gild needs a bandwidth scheme, got {self.scheme!r}")
            if self.scheme == "fixed":
                if self.sigma is None or not self.sigma > 0:
                    raise ValueError(f"fixed bandwidth must be positive, got {self.sigma}")
            elif self.sigma is not None:
                raise ValueError("sigma only applies to the fixed scheme")
        else:
            if self.scheme is not None or self.sigma is not None:
                raise ValueError(f"{self.kind} takes no bandwidth parameters")

    @property
    def adaptive(self) -> bool:
        return self.kind == "gild" and self.scheme in ("adjusted_min", "adjusted_med")

    def label(self) -> str:
        if self.kind != "gild":
            return self.kind
        if self.scheme == "fixed":
            return f"gild:fixed={format(self.sigma, '.17g')}"
        return f"gild:{self.scheme}"

    @classmethod
    def parse(cls, token: str) -> "ObjectiveSpec":
        """Parse 'ild' | 'disp' | 'gild:fixed=<s>' | 'gild:adjusted_min' | 'gild:adjusted_med'."""
        token = token.strip().lower()
        if token in ("ild", "disp"):
            return cls(token)
        if token.startswith("gild:"):
            rest = token[len("gild:"):]
            if rest in ("adjusted_min", "adjusted_med"):
                return cls("gild", scheme=rest)
            if rest.startswith("fixed="):
                return cls("gild", scheme="fixed", sigma=float(rest[len("fixed="):]))
        raise ValueError(
            f"cannot parse objective {token!r}; expected ild | disp | "
            "gild:fixed=<sigma> | gild:adjusted_min | gild:adjusted_med"
        )


ILD_SPEC = ObjectiveSpec("ild")
DISP_SPEC = ObjectiveSpec("disp")


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective value with definedness (|S| < 2 has no pairs)."""

    value: float
    defined: bool

    def or_zero(self) -> float:
        return self.value if self.defined else 0.0


_UNDEFINED = ObjectiveValue(0.0, False)


def _canonical_items(items) -> np.ndarray:
    return np.unique(np.asarray(list(items), dtype=np.intp))


def kernel_distance_arr(d: np.ndarray, sigma: float) -> np.ndarray:
    """Vectorized Gaussian kernel distance sqrt(2 - 2 exp(-d^2 / 2 sigma^2)).

    Computed as sqrt(-2 expm1(-u)) to keep precision near d = 0; saturates to
    exactly sqrt(2) once u = d^2/(2 sigma^2) exceeds the underflow threshold.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = np.asarray(d, dtype=np.float64)
    u = (d * d) / (2.0 * sigma * sigma)
    return np.where(u > _UNDERFLOW_EXPONENT, SQRT2, np.sqrt(-2.0 * np.expm1(-u)))


def kernel_distance(d: float, sigma: float) -> float:
    """Gaussian kernel distance for a single pairwise distance d >= 0."""
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    return float(kernel_distance_arr(np.array([d]), sigma)[0])


def _kernel_with_limit(d: np.ndarray, sigma: float) -> np.ndarray:
    """kernel_distance_arr extended to sigma = 0 by its one-sided limit.

    Adjusted bandwidths are distance quantiles and hit 0 on pseudometric
    catalogs with duplicate items; the limit is sqrt(2) for d > 0, 0 at d = 0.
    """
    if sigma == 0.0:
        d = np.asarray(d, dtype=np.float64)
        return np.where(d > 0.0, SQRT2, 0.0)
    return kernel_distance_arr(d, sigma)


def gild_from_distances(pair_distances: np.ndarray, sigma: float) -> float:
    """Average kernel distance over a pair-distance multiset.

    Clamped to sqrt(2): averaging many saturated terms can round one ulp
    above the bound. Accepts sigma = 0 via the kernel's one-sided limit.
    """
    return min(float(_kernel_with_limit(pair_distances, sigma).mean()), SQRT2)


def ild(oracle: DistanceOracle, items) -> ObjectiveValue:
    """Average pairwise distance over the set (undefined for |S| < 2)."""
    items = _canonical_items(items)
    k = items.size
    if k < 2:
        return _UNDEFINED
    total = float(oracle.pairwise(items).sum())
    return ObjectiveValue(total / math.comb(k, 2), True)


def dispersion(oracle: DistanceOracle, items) -> ObjectiveValue:
    """Minimum pairwise distance over the set (undefined for |S| < 2)."""
    items = _canonical_items(items)
    if items.size < 2:
        return _UNDEFINED
    return ObjectiveValue(float(oracle.pairwise(items).min()), True)


def gild(oracle: DistanceOracle, items, sigma: float) -> ObjectiveValue:
    """Average Gaussian kernel distance over the set at bandwidth sigma."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    items = _canonical_items(items)
    if items.size < 2:
        return _UNDEFINED
    return ObjectiveValue(gild_from_distances(oracle.pairwise(items), sigma), True)


def bandwidth_divisor(k: int) -> float:
    """sqrt(2 ln(C(k,2) - 1)); positive for k >= 3."""
    pairs = math.comb(k, 2)
    if pairs < 3:
        raise ValueError(f"bandwidth undefined for |S| = {k}; needs C(k,2) - 1 >= 2")
    return math.sqrt(2.0 * math.log(pairs - 1))


def adjusted_sigma_from_distances(pair_distances: np.ndarray, k: int, scheme: str) -> float:
    """Adjusted min/median bandwidth from a precomputed pair-distance multiset."""
    divisor = bandwidth_divisor(k)
    if scheme == "adjusted_min":
        base = float(np.min(pair_distances))
    elif scheme == "adjusted_med":
        base = float(np.median(pair_distances))
    else:
        raise ValueError(f"unknown bandwidth scheme {scheme!r}")
    return base / divisor


def adjusted_sigma(oracle: DistanceOracle, items, scheme: str) -> float:
    """Adjusted minimum/median bandwidth of a set (requires |S| >= 3).

    The k = 2 case is deliberately an error here; the adaptive optimizer
    handles it by picking a farthest pair instead.
    """
    items = _canonical_items(items)
    if items.size < 3:
        raise ValueError(f"bandwidth undefined for |S| = {items.size}; needs |S| >= 3")
    return adjusted_sigma_from_distances(oracle.pairwise(items), items.size, scheme)


def evaluate(oracle: DistanceOracle, spec: ObjectiveSpec, items) -> ObjectiveValue:
    """Measure an objective spec on a fixed set.

    Adjusted-bandwidth GILD on a 2-item set is undefined (the bandwidth
    formula degenerates); callers that need a value there must choose a
    sigma explicitly.
    """
    if spec.kind == "ild":
        return ild(oracle, items)
    if spec.kind == "disp":
        return dispersion(oracle, items)
    if spec.scheme == "fixed":
        return gild(oracle, items, spec.sigma)
    items = _canonical_items(items)
    if items.size < 3:
        return _UNDEFINED
    pair = oracle.pairwise(items)
    sigma = adjusted_sigma_from_distances(pair, items.size, spec.scheme)
    return ObjectiveValue(gild_from_distances(pair, sigma), True)
