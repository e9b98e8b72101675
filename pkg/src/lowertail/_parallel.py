"""Order-preserving trial map over an optional process pool."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_workers(workers) -> int:
    if workers in (None, "auto", 0):
        return os.cpu_count() or 1
    return max(1, int(workers))


def _run_chunk(func, lo, hi):
    return [func(i) for i in range(lo, hi)]


def map_trials(func, n_trials: int, workers=1) -> list:
    """``[func(i) for i in range(n_trials)]``, possibly computed in worker processes.

    ``func`` must be picklable and depend only on ``i`` (per-trial substreams),
    so the result never depends on the worker count.
    """
    workers = resolve_workers(workers)
    if workers == 1 or n_trials < 2:
        return [func(i) for i in range(n_trials)]
    n_chunks = min(n_trials, 4 * workers)
    bounds = [round(n_trials * c / n_chunks) for c in range(n_chunks + 1)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, func, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            out.extend(fut.result())
    return out
