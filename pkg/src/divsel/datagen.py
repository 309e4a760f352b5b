"""Synthetic catalogs: the two geometric point clouds, the two adversarial
constructions behind the tightness claims, and a block-structured synthetic
recommendation task for end-to-end reranking tests.

The geometric generators draw uniform points by rejection sampling from the
bounding box (seeded; pairs consumed in row-major chunks, so output depends
only on the seed). The adversarial constructions are deterministic.
"""
from __future__ import annotations

import numpy as np

from .catalogs import FeatureCatalog, GenreCatalog
from .dataio import FeedbackMatrix
from .util import rng_for

TWO_CIRCLES_RADIUS = 0.25
TWO_CIRCLES_CENTERS = ((-0.75, 0.0), (0.75, 0.0))
ELLIPSE_SEMI_MAJOR = 1.0
ELLIPSE_SEMI_MINOR = 0.25  # flattening 3/4: b = a * (1 - 3/4)

_BATCH = 1024


def _rejection_disk(rng: np.random.Generator, count: int, center, radius: float) -> np.ndarray:
    cx, cy = center
    out = np.empty((count, 2), dtype=np.float64)
    got = 0
    while got < count:
        pts = rng.uniform(-radius, radius, size=(_BATCH, 2))
        keep = pts[(pts ** 2).sum(axis=1) <= radius * radius]
        take = min(count - got, keep.shape[0])
        out[got:got + take] = keep[:take]
        got += take
    out[:, 0] += cx
    out[:, 1] += cy
    return out


def gen_two_circles(n: int, seed: int) -> FeatureCatalog:
    """n uniform points in two disks of radius 1/4 centered at (-3/4, 0), (3/4, 0).

    The split is as even as parity allows (the left disk gets the extra point
    for odd n); ids [0, n_left) are the left disk, the rest the right.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = rng_for(seed, "two-circles")
    n_left = n - n // 2
    left = _rejection_disk(rng, n_left, TWO_CIRCLES_CENTERS[0], TWO_CIRCLES_RADIUS)
    right = _rejection_disk(rng, n - n_left, TWO_CIRCLES_CENTERS[1], TWO_CIRCLES_RADIUS)
    return FeatureCatalog(np.vstack([left, right]))


def gen_ellipse(n: int, seed: int) -> FeatureCatalog:
    """n uniform points in the axis-aligned ellipse x^2 + (y/0.25)^2 <= 1."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = rng_for(seed, "ellipse")
    a, b = ELLIPSE_SEMI_MAJOR, ELLIPSE_SEMI_MINOR
    out = np.empty((n, 2), dtype=np.float64)
    got = 0
    while got < n:
        pts = rng.uniform(-1.0, 1.0, size=(_BATCH, 2))
        pts[:, 0] *= a
        pts[:, 1] *= b
        keep = pts[(pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2 <= 1.0]
        take = min(n - got, keep.shape[0])
        out[got:got + take] = keep[:take]
        got += take
    return FeatureCatalog(out)


def gen_claim32(n: int, eps: float) -> FeatureCatalog:
    """Two tight clusters with unit cross distances, in R^(n+2).

    n vectors (the construction's X group first, then Y; n/2 each): within a
    group all pairwise distances are exactly eps, across groups exactly 1,
    so the diameter is 1 while every k-subset with k >= 3 has dispersion eps.
    """
    if n % 4 != 0 or n <= 0:
        raise ValueError(f"n must be a positive multiple of 4, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    half = n // 2
    d = n + 2
    tall = np.sqrt((1.0 - eps * eps) / 2.0)
    lean = eps / np.sqrt(2.0)
    vectors = np.zeros((n, d), dtype=np.float64)
    for i in range(half):
        vectors[i, i] = lean
        vectors[i, n] = tall
    for i in range(half):
        vectors[half + i, half + i] = lean
        vectors[half + i, n + 1] = tall
    return FeatureCatalog(vectors)


def gen_claim33(n: int) -> FeatureCatalog:
    """Duplicated segment endpoints plus distinct interior points, on a line.

    2n - 2 one-dimensional vectors: n/2 copies of 1, n/2 copies of n, then the
    distinct values 2..n-1. The max-average optimum at k = n takes all the
    duplicated endpoints (dispersion 0) while {1, ..., n} has dispersion 1.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 4, got {n}")
    half = n // 2
    values = [1.0] * half + [float(n)] * half + [float(v) for v in range(2, n)]
    return FeatureCatalog(np.asarray(values, dtype=np.float64)[:, None])


def gen_block_feedback(n_users: int = 200, n_items: int = 300, blocks: int = 4,
                       seed: int = 0, in_block: float = 0.25, noise: float = 0.01,
                       genre_pool: int = 12
                       ) -> tuple[FeedbackMatrix, GenreCatalog]:
    """Block-structured synthetic recommendation task with duplicate genre sets.

    Users and items are partitioned into ``blocks`` aligned groups; a user
    interacts with an in-block item with probability ``in_block`` and any
    other item with probability ``noise``. Every user gets at least one
    interaction. Items draw small genre sets from ``genre_pool`` tokens, with
    few enough combinations that many items share an identical set (so
    min-distance diversity collapses to 0 on relevance-heavy lists).
    """
    if blocks < 1 or n_users < blocks or n_items < blocks:
        raise ValueError("need at least one user and item per block")
    rng = rng_for(seed, "block-feedback")
    user_block = np.arange(n_users) % blocks
    item_block = np.arange(n_items) % blocks
    prob = np.where(user_block[:, None] == item_block[None, :], in_block, noise)
    hits = rng.random((n_users, n_items)) < prob
    for u in range(n_users):
        if not hits[u].any():
            fallback = rng.integers(0, n_items)
            hits[u, fallback] = True
    users, items = np.nonzero(hits)
    fm = FeedbackMatrix.from_pairs(np.column_stack([users, items]),
                                   m=n_users, n=n_items)

    tokens = [f"g{t}" for t in range(genre_pool)]
    sets = []
    for i in range(n_items):
        size = int(rng.integers(1, 4))
        base = item_block[i] * (genre_pool // blocks)
        chosen = rng.choice(genre_pool // 2, size=size, replace=False)
        sets.append(frozenset(tokens[(base + c) % genre_pool] for c in chosen))
    return fm, GenreCatalog(tuple(sets))
