"""Replicate farming over a process pool.

Results come back in job order, so output never depends on the pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "IFACESIM_THREADS"


def pool_size(requested: int | None = None) -> int:
    """Worker count: explicit request, else ``IFACESIM_THREADS``, else the CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError as err:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {env!r}") from err
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
               else os.cpu_count() or 1)


def farm(fn: Callable[[T], R], jobs: Sequence[T], workers: int | None = None) -> list[R]:
    n = pool_size(workers)
    if n == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, jobs, chunksize=chunk))
