"""Seeded fan-out over worker processes.

``RADIANT_THREADS`` caps the number of workers; results always come back
ordered by seed, whatever order the workers finish in.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def worker_count(requested: int | None = None) -> int:
    limit = os.environ.get("RADIANT_THREADS")
    n = requested or os.cpu_count() or 1
    if limit:
        n = min(n, max(1, int(limit)))
    return max(1, n)


def map_seeds(func, seeds, workers: int | None = None) -> list:
    """Call ``func(seed)`` for each seed; returns ``[(seed, result), ...]``
    sorted by seed."""
    seeds = sorted(seeds)
    workers = min(worker_count(workers), len(seeds)) if seeds else 1
    if workers <= 1:
        results = [func(s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(func, seeds))
    return list(zip(seeds, results))
