"""Pairwise distance oracle over a catalog.

One abstraction serves all metrics: Euclidean and cosine over feature
vectors, Jaccard over genre sets. Cosine is exposed raw as
1 - (x.y)/(|x||y|) in [0, 2]. Jaccard is a pseudometric: two items with
identical genre sets are at distance 0.

Guarantees relied on elsewhere:
  * d(i, i) = 0 and d(i, j) = d(j, i), bitwise.
  * The optional full-matrix cache (packed upper triangle, n(n-1)/2 values)
    returns identical bits to uncached evaluation.
  * All arithmetic in float64.
"""
from __future__ import annotations

import numpy as np

from .catalogs import FeatureCatalog, GenreCatalog
from .util import DataError

METRICS = ("euclidean", "cosine", "jaccard")


def _condensed_index(n: int, lo, hi):
    """Packed-upper-triangle index of pair (lo, hi), lo < hi."""
    return n * lo - lo * (lo + 1) // 2 + (hi - lo - 1)


class DistanceOracle:
    """Immutable pairwise-distance access for items 0..n-1.

    Construct via :meth:`from_features` or :meth:`from_genres`. Safe for
    unlimited concurrent reads after construction.
    """

    def __init__(self, metric: str, n: int, row_fn, cache: str = "none"):
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
        if cache not in ("none", "full"):
            raise ValueError(f"cache policy must be 'none' or 'full', got {cache!r}")
        self.metric = metric
        self.n = n
        self._row_fn = row_fn
        self._cache = None
        if cache == "full":
            packed = np.empty(n * (n - 1) // 2, dtype=np.float64)
            for i in range(n - 1):
                js = np.arange(i + 1, n)
                packed[_condensed_index(n, i, i + 1):_condensed_index(n, i, n - 1) + 1] = row_fn(i, js)
            self._cache = packed

    @classmethod
    def from_features(cls, catalog: FeatureCatalog, metric: str = "euclidean",
                      cache: str = "none") -> "DistanceOracle":
        if metric == "jaccard":
            raise ValueError("jaccard requires a GenreCatalog; use from_genres")
        x = catalog.vectors
        if metric == "euclidean":
            def row_fn(i, js):
                return np.sqrt(((x[js] - x[i]) ** 2).sum(axis=1))
        elif metric == "cosine":
            norms = np.sqrt((x * x).sum(axis=1))
            if np.any(norms == 0.0):
                bad = int(np.flatnonzero(norms == 0.0)[0])
                raise DataError(f"cosine distance undefined for zero-norm vector (item {bad})")

            def row_fn(i, js):
                sims = (x[js] @ x[i]) / (norms[js] * norms[i])
                return np.maximum(0.0, 1.0 - sims)
        else:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
        return cls(metric, catalog.n, row_fn, cache=cache)

    @classmethod
    def from_genres(cls, catalog: GenreCatalog, cache: str = "none") -> "DistanceOracle":
        members = catalog.membership_matrix()

        def row_fn(i, js):
            inter = (members[js] & members[i]).sum(axis=1)
            union = (members[js] | members[i]).sum(axis=1)
            return 1.0 - inter / union
        return cls("jaccard", catalog.n, row_fn, cache=cache)

    @property
    def cached(self) -> bool:
        return self._cache is not None

    def _check_index(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"item {i} out of range [0, {self.n})")
        return i

    def pair_distances(self, i: int, js) -> np.ndarray:
        """Distances from item i to each item in js (vectorized)."""
        i = self._check_index(i)
        js = np.asarray(js, dtype=np.intp)
        if js.size and (js.min() < 0 or js.max() >= self.n):
            raise IndexError(f"item index out of range [0, {self.n})")
        if self._cache is not None:
            same = js == i
            # diagonal entries are overwritten below; point them at pair (0, 1)
            lo = np.where(same, 0, np.minimum(i, js))
            hi = np.where(same, 1, np.maximum(i, js))
            out = self._cache[_condensed_index(self.n, lo, hi)]
        else:
            out = self._row_fn(i, js)
        out = np.asarray(out, dtype=np.float64)
        out[js == i] = 0.0
        return out

    def distance(self, i: int, j: int) -> float:
        """Pairwise distance d(i, j); 0 exactly when i == j."""
        j = self._check_index(j)
        if i == j:
            self._check_index(i)
            return 0.0
        return float(self.pair_distances(i, np.array([j]))[0])

    def pairwise(self, items) -> np.ndarray:
        """All C(k, 2) pairwise distances among ``items`` (condensed order)."""
        items = np.asarray(items, dtype=np.intp)
        k = items.size
        if k < 2:
            return np.empty(0, dtype=np.float64)
        chunks = [self.pair_distances(int(items[t]), items[t + 1:]) for t in range(k - 1)]
        return np.concatenate(chunks)

    def submatrix(self, items) -> np.ndarray:
        """Dense (k, k) distance matrix over ``items``."""
        items = np.asarray(items, dtype=np.intp)
        k = items.size
        out = np.zeros((k, k), dtype=np.float64)
        for t in range(k - 1):
            row = self.pair_distances(int(items[t]), items[t + 1:])
            out[t, t + 1:] = row
            out[t + 1:, t] = row
        return out

    def diameter(self, items=None) -> float:
        """Exact maximum pairwise distance over ``items`` (default: all)."""
        if items is None:
            if self._cache is not None:
                return float(self._cache.max())
            items = np.arange(self.n)
        else:
            items = np.asarray(items, dtype=np.intp)
        if items.size < 2:
            raise ValueError(f"diameter needs at least 2 items, got {items.size}")
        best = 0.0
        for t in range(items.size - 1):
            row = self.pair_distances(int(items[t]), items[t + 1:])
            m = float(row.max())
            if m > best:
                best = m
        return best


def diameter(oracle: DistanceOracle, items=None) -> float:
    return oracle.diameter(items)
