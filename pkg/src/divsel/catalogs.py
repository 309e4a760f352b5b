"""Item catalogs: dense feature vectors and genre (token-set) descriptions.

Items are dense integer ids 0..n-1. Two catalog flavors back the distance
oracle: FeatureCatalog (real vectors, for Euclidean/cosine) and GenreCatalog
(non-empty token sets, for Jaccard).

File formats (UTF-8 CSV):
  features: header ``id,f0,...,f{d-1}``, ids 0..n-1 in order.
  genres:   header ``id,genres``, genres as pipe-separated tokens.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .util import DataError, format_float


@dataclass(frozen=True)
class FeatureCatalog:
    """n items with d-dimensional real feature vectors (rows of ``vectors``)."""

    vectors: np.ndarray  # (n, d) float64

    def __post_init__(self):
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vectors)
        if vectors.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {vectors.shape}")
        n, d = vectors.shape
        if n < 2:
            raise DataError(f"catalog needs at least 2 items, got {n}")
        if d < 1:
            raise DataError("feature dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            raise DataError("feature vectors must be finite")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def scaled(self, factor: float) -> "FeatureCatalog":
        """Catalog with every vector multiplied by ``factor`` (> 0)."""
        if not factor > 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return FeatureCatalog(self.vectors * float(factor))


@dataclass(frozen=True)
class GenreCatalog:
    """n items, each with a non-empty finite set of genre tokens."""

    sets: tuple[frozenset[str], ...]

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if len(sets) < 2:
            raise DataError(f"catalog needs at least 2 items, got {len(sets)}")
        for i, s in enumerate(sets):
            if not s:
                raise DataError(f"item {i} has an empty genre set")

    @property
    def n(self) -> int:
        return len(self.sets)

    def vocabulary(self) -> list[str]:
        vocab = set()
        for s in self.sets:
            vocab |= s
        return sorted(vocab)

    def membership_matrix(self) -> np.ndarray:
        """(n, |vocab|) boolean incidence matrix, vocab in sorted order."""
        vocab = self.vocabulary()
        index = {tok: j for j, tok in enumerate(vocab)}
        mat = np.zeros((self.n, len(vocab)), dtype=bool)
        for i, s in enumerate(self.sets):
            for tok in s:
                mat[i, index[tok]] = True
        return mat


def read_features(path) -> FeatureCatalog:
    """Load a feature CSV (header ``id,f0,...``; ids must be 0..n-1 in order)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0] != "id":
            raise DataError(f"{path}: expected header starting with 'id'")
        d = len(header) - 1
        if d < 1 or header[1:] != [f"f{j}" for j in range(d)]:
            raise DataError(f"{path}: expected feature columns f0..f{{d-1}}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                item = int(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if item != len(rows):
                raise DataError(f"{path}:{lineno}: ids must be 0..n-1 in order, got {item}")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no items")
    return FeatureCatalog(np.asarray(rows, dtype=np.float64))


def write_features(catalog: FeatureCatalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"f{j}" for j in range(catalog.d)])
        for i in range(catalog.n):
            writer.writerow([i] + [format_float(v) for v in catalog.vectors[i]])


def read_genres(path) -> GenreCatalog:
    """Load a genre CSV (header ``id,genres``; pipe-separated tokens)."""
    sets = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "genres"]:
            raise DataError(f"{path}: expected header 'id,genres'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                item = int(row[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if item != len(sets):
                raise DataError(f"{path}:{lineno}: ids must be 0..n-1 in order, got {item}")
            tokens = frozenset(tok for tok in row[1].split("|") if tok)
            if not tokens:
                raise DataError(f"{path}:{lineno}: item {item} has no genres")
            sets.append(tokens)
    if not sets:
        raise DataError(f"{path}: no items")
    return GenreCatalog(tuple(sets))


def write_genres(catalog: GenreCatalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "genres"])
        for i, s in enumerate(catalog.sets):
            writer.writerow([i, "|".join(sorted(s))])
