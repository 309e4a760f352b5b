"""Item-item linear relevance model with a closed-form ridge solution.

The model solves  min_B |X - XB|_F^2 + l2 |B|_F^2  subject to diag(B) = 0,
whose closed form is P = (X^T X + l2 I)^-1, B = I - P diag(1/diag(P)).
Scores for a user are their binary history row times B; training items are
masked to -inf so rerankers can never re-recommend them.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dataio import FeedbackMatrix
from .util import DataError

_MAGIC = b"DIVSEASE"


@dataclass(frozen=True)
class EaseModel:
    """Dense item-item weight matrix with an exactly zero diagonal."""

    b: np.ndarray  # (n, n) float64
    l2: float

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        object.__setattr__(self, "b", b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"weight matrix must be square, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("weight matrix must be finite")
        if np.any(np.diag(b) != 0.0):
            raise ValueError("weight matrix diagonal must be exactly zero")

    @property
    def n(self) -> int:
        return self.b.shape[0]


def fit_ease(train: FeedbackMatrix, l2: float) -> EaseModel:
    """Closed-form fit via Cholesky on the Gram matrix (SPD for l2 > 0)."""
    if not l2 > 0:
        raise ValueError(f"l2 must be positive, got {l2}")
    x = train.to_csr()
    gram = (x.T @ x).toarray().astype(np.float64)
    gram[np.diag_indices_from(gram)] += l2
    factor = scipy.linalg.cho_factor(gram, lower=True)
    p = scipy.linalg.cho_solve(factor, np.eye(train.n))
    b = -p / np.diag(p)[None, :]
    np.fill_diagonal(b, 0.0)
    return EaseModel(b=b, l2=float(l2))


def score_users(model: EaseModel, fm: FeedbackMatrix, user: int,
                mask_training: bool = True) -> np.ndarray:
    """Per-item relevance scores x_u B for one user.

    With ``mask_training`` the user's training items are set to -inf, which
    downstream rerankers treat as excluded.
    """
    if model.n != fm.n:
        raise ValueError(f"model has {model.n} items, feedback has {fm.n}")
    history = fm.user_items(user)
    scores = model.b[history].sum(axis=0) if history.size else np.zeros(model.n)
    if mask_training:
        scores = scores.copy()
        scores[history] = -np.inf
    return scores


def tune_l2(train: FeedbackMatrix, validation: FeedbackMatrix, grid,
            k: int = 50) -> float:
    """Grid value maximizing mean nDCG@k on validation; ties to the smaller l2.

    Ranking is by pure relevance (training items masked); validation items of
    each user are the relevant set.
    """
    from .experiments import ndcg  # local import; experiments builds on this module

    values = sorted(set(float(g) for g in grid))
    if not values:
        raise ValueError("grid must be non-empty")
    best_l2, best_score = None, -np.inf
    for l2 in values:
        model = fit_ease(train, l2)
        total = 0.0
        for user in range(train.m):
            scores = score_users(model, train, user)
            order = np.argsort(-scores, kind="stable")[:k]
            total += ndcg(order.tolist(), set(validation.user_items(user).tolist()), k)
        mean = total / train.m
        if mean > best_score:
            best_score = mean
            best_l2 = l2
    return best_l2


def save_ease(model: EaseModel, path) -> None:
    """Binary dump: magic, item count, l2, then row-major float64 weights."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Qd", model.n, model.l2))
        fh.write(model.b.astype("<f8").tobytes(order="C"))


def load_ease(path) -> EaseModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 16 or blob[:len(_MAGIC)] != _MAGIC:
        raise DataError(f"{path}: not an EASE model file")
    n, l2 = struct.unpack_from("<Qd", blob, len(_MAGIC))
    offset = len(_MAGIC) + 16
    expected = n * n * 8
    if len(blob) - offset != expected:
        raise DataError(f"{path}: truncated model file")
    b = np.frombuffer(blob, dtype="<f8", offset=offset).reshape(n, n).copy()
    return EaseModel(b=b, l2=l2)


def export_ease_csv(model: EaseModel, path) -> None:
    """Debugging path: the weight matrix as plain CSV rows."""
    np.savetxt(path, model.b, delimiter=",", fmt="%r")
