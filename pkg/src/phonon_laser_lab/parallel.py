"""Deterministic process-pool map used by the sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

THREADS_ENV = "PHONON_LAB_THREADS"


def resolve_workers(n_jobs: int | None = None) -> int:
    """``n_jobs`` of 0/None means: environment variable, else CPU count."""
    if n_jobs is None or n_jobs == 0:
        env = os.environ.get(THREADS_ENV, "").strip()
        n_jobs = int(env) if env else 0
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def pmap(func, items, n_jobs: int | None = 1) -> list:
    """Ordered map over ``items``.

    Each item is evaluated independently and results come back in input order,
    so the output does not depend on the number of workers.
    """
    items = list(items)
    workers = min(resolve_workers(n_jobs), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=1))
