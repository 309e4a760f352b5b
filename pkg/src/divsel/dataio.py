"""Implicit-feedback ingestion, truncated SVD item embeddings, and splits.

Feedback CSV format: header ``user,item`` (an optional third column, e.g. a
rating or timestamp, is ignored), UTF-8. Interactions are binary and
deduplicated on load.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .catalogs import FeatureCatalog
from .util import DataError, rng_for


@dataclass(frozen=True)
class FeedbackMatrix:
    """Binary user-item interactions: unique (user, item) pairs, lex-sorted."""

    m: int
    n: int
    pairs: np.ndarray  # (N, 2) int64
    duplicates_dropped: int = 0

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "pairs", pairs)
        if pairs.shape[0] == 0:
            raise DataError("no interactions")
        if pairs.min() < 0:
            raise DataError("negative user or item index")
        if pairs[:, 0].max() >= self.m or pairs[:, 1].max() >= self.n:
            raise DataError(
                f"interaction index out of range for shape ({self.m}, {self.n})"
            )

    @classmethod
    def from_pairs(cls, pairs, m: int | None = None, n: int | None = None) -> "FeedbackMatrix":
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.shape[0] == 0:
            raise DataError("no interactions")
        unique = np.unique(pairs, axis=0)
        dropped = pairs.shape[0] - unique.shape[0]
        m = int(pairs[:, 0].max()) + 1 if m is None else m
        n = int(pairs[:, 1].max()) + 1 if n is None else n
        return cls(m=m, n=n, pairs=unique, duplicates_dropped=dropped)

    @property
    def count(self) -> int:
        return self.pairs.shape[0]

    @property
    def density(self) -> float:
        return self.count / (self.m * self.n)

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(self.count, dtype=np.float64)
        return sp.csr_matrix((data, (self.pairs[:, 0], self.pairs[:, 1])),
                             shape=(self.m, self.n))

    def user_items(self, user: int) -> np.ndarray:
        """Items the user interacted with (ascending)."""
        if not 0 <= user < self.m:
            raise IndexError(f"user {user} out of range [0, {self.m})")
        users = self.pairs[:, 0]
        lo = np.searchsorted(users, user, side="left")
        hi = np.searchsorted(users, user, side="right")
        return self.pairs[lo:hi, 1].copy()


def load_feedback(path) -> FeedbackMatrix:
    """Load a feedback CSV; duplicate rows are dropped (counter on the result)."""
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0] != "user" or header[1] != "item":
            raise DataError(f"{path}: expected header 'user,item[,...]'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected at least 2 fields")
            try:
                u, i = int(row[0]), int(row[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if u < 0 or i < 0:
                raise DataError(f"{path}:{lineno}: negative index")
            pairs.append((u, i))
    if not pairs:
        raise DataError(f"{path}: no interactions")
    return FeedbackMatrix.from_pairs(np.asarray(pairs, dtype=np.int64))


def write_feedback(fm: FeedbackMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "item"])
        for u, i in fm.pairs:
            writer.writerow([int(u), int(i)])


@dataclass(frozen=True)
class SplitSpec:
    """Interaction-level split ratios (train, validation, test) and seed."""

    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError(f"ratios must be 3 positive numbers, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


def _largest_remainder_sizes(total: int, ratios) -> list[int]:
    raw = [r * total for r in ratios]
    base = [int(np.floor(x)) for x in raw]
    short = total - sum(base)
    order = np.argsort([-(x - b) for x, b in zip(raw, base)], kind="stable")
    for j in range(short):
        base[order[j]] += 1
    return base


def split_feedback(fm: FeedbackMatrix, spec: SplitSpec
                   ) -> tuple[FeedbackMatrix, FeedbackMatrix, FeedbackMatrix]:
    """Random per-interaction split (weak generalization).

    Users may appear in every split; the three entry sets are disjoint and
    their union is the input. Sizes follow the largest-remainder rounding of
    the ratios.
    """
    sizes = _largest_remainder_sizes(fm.count, spec.ratios)
    perm = rng_for(spec.seed, "split").permutation(fm.count)
    out = []
    start = 0
    for size in sizes:
        take = perm[start:start + size]
        start += size
        chunk = fm.pairs[np.sort(take)]
        out.append(FeedbackMatrix(m=fm.m, n=fm.n, pairs=chunk))
    return tuple(out)


def filter_feedback(fm: FeedbackMatrix, min_user: int = 1, min_item: int = 1
                    ) -> tuple[FeedbackMatrix, np.ndarray, np.ndarray]:
    """Drop users/items below the interaction thresholds, to a fixed point.

    Filtering users can push items below threshold and vice versa, so the two
    filters alternate until stable. Returns the reindexed matrix plus the
    surviving original user and item ids (position = new id).
    """
    pairs = fm.pairs
    while True:
        users, user_counts = np.unique(pairs[:, 0], return_counts=True)
        keep_users = set(users[user_counts >= min_user].tolist())
        items, item_counts = np.unique(pairs[:, 1], return_counts=True)
        keep_items = set(items[item_counts >= min_item].tolist())
        mask = np.array([u in keep_users and i in keep_items for u, i in pairs])
        if mask.all():
            break
        pairs = pairs[mask]
        if pairs.shape[0] == 0:
            raise DataError("filtering removed all interactions")
    user_ids = np.unique(pairs[:, 0])
    item_ids = np.unique(pairs[:, 1])
    new_pairs = np.column_stack([
        np.searchsorted(user_ids, pairs[:, 0]),
        np.searchsorted(item_ids, pairs[:, 1]),
    ])
    fm_out = FeedbackMatrix.from_pairs(new_pairs, m=user_ids.size, n=item_ids.size)
    return fm_out, user_ids, item_ids


@dataclass(frozen=True)
class EmbeddingSpec:
    """Randomized truncated SVD parameters for item embeddings."""

    d: int = 32
    oversampling: int = 8
    power_iterations: int = 4
    seed: int = 0
    sigma_scale: bool = False  # emit rows of V*Sigma instead of rows of V

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"embedding dimension must be >= 1, got {self.d}")
        if self.oversampling < 0 or self.power_iterations < 0:
            raise ValueError("oversampling and power_iterations must be >= 0")


def embed_items(fm: FeedbackMatrix, spec: EmbeddingSpec) -> FeatureCatalog:
    """Item vectors from a truncated SVD of the feedback matrix X = U S V^T.

    Item i gets row i of V (the right singular vectors), unscaled by default.
    Uses a randomized range finder with QR renormalized power iterations and
    an exact SVD of the projected matrix; deterministic given the seed.
    Directions below numerical rank are zeroed (their singular vectors are
    arbitrary), so e.g. a rank-1 matrix yields identical item vectors.
    """
    if spec.d > min(fm.m, fm.n):
        raise DataError(
            f"embedding dimension {spec.d} exceeds min(m, n) = {min(fm.m, fm.n)}"
        )
    x = fm.to_csr()
    ell = min(spec.d + spec.oversampling, min(fm.m, fm.n))
    rng = rng_for(spec.seed, "svd-rangefinder")
    omega = rng.standard_normal((fm.n, ell))
    q, _ = np.linalg.qr(x @ omega)
    for _ in range(spec.power_iterations):
        z, _ = np.linalg.qr(x.T @ q)
        q, _ = np.linalg.qr(x @ z)
    b = (x.T @ q).T  # ell x n projected matrix
    _, s, vt = np.linalg.svd(b, full_matrices=False)
    v = vt[:spec.d].T.copy()  # n x d, rows are item vectors
    s_d = s[:spec.d].copy()
    if s.size:
        cutoff = s[0] * max(fm.m, fm.n) * np.finfo(np.float64).eps
        dead = s_d <= cutoff
        v[:, dead] = 0.0
        s_d[dead] = 0.0
    if spec.sigma_scale:
        v = v * s_d
    return FeatureCatalog(v)
