"""Numeric and concurrency helpers shared across modules."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .core import ValidationError

T = TypeVar("T")
R = TypeVar("R")

JOBS_ENV_VAR = "CIF_EVAL_JOBS"


def compensated_sum(values: np.ndarray) -> float:
    """Error-corrected sum; exact rounding of the true sum."""
    return math.fsum(np.asarray(values, dtype=float))


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> float:
    """Compensated sum of w*v; the products are formed once in float64."""
    return math.fsum(np.asarray(weights, dtype=float) * np.asarray(values, dtype=float))


def resolve_jobs(jobs: int | None) -> int:
    """Explicit argument wins, then the CIF_EVAL_JOBS variable, then 1."""
    if jobs is None:
        env = os.environ.get(JOBS_ENV_VAR, "").strip()
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ValidationError(
                    f"{JOBS_ENV_VAR} must be an integer, got {env!r}"
                ) from None
        else:
            jobs = 1
    if jobs < 1:
        raise ValidationError(f"jobs must be >= 1, got {jobs}")
    return jobs


def parallel_map(fn: Callable[[T], R], items: Sequence[T], jobs: int | None = None) -> list[R]:
    """Map preserving input order so reductions are parallelism-independent.

    Tasks must be pure given their argument (each carries its own RNG seed);
    results are accumulated in task-index order, so any jobs value yields
    bit-identical output.
    """
    jobs = resolve_jobs(jobs)
    items = list(items)
    if jobs == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def spawn_seeds(master_seed: int, count: int) -> list[int]:
    """Derive `count` independent 64-bit task seeds from one master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; cheap to construct per task."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
