"""Shared plumbing: errors, seeded substreams, worker pools."""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV_VAR = "DIVSEL_THREADS"


class DivselError(Exception):
    """Base class for errors raised by this package."""


class DataError(DivselError):
    """Malformed or out-of-contract input data (CLI exit code 2)."""


class BudgetExceededError(DivselError):
    """An exhaustive computation would exceed its configured budget."""


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Derive a labeled RNG substream from a single master seed.

    All randomness in multi-stage runs flows from one seed; substreams are
    separated by hashing the label so that adding a new consumer never
    perturbs existing streams.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    salt = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([int(seed), salt]))


def resolve_threads(requested: int | None = None) -> int:
    """Worker-pool width: explicit value, else DIVSEL_THREADS, else 1."""
    if requested is not None:
        if requested < 1:
            raise ValueError(f"thread count must be >= 1, got {requested}")
        return int(requested)
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise DataError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
        if value < 1:
            raise DataError(f"{THREADS_ENV_VAR} must be >= 1, got {value}")
        return value
    return 1


def ordered_map(fn, items, threads: int = 1) -> list:
    """Apply fn over items, optionally on a thread pool.

    Results are collected in input order, so the output is identical for any
    thread count (each call must be pure).
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def format_float(x: float) -> str:
    """Shortest round-tripping decimal form, for deterministic text output."""
    return repr(float(x))
