"""Small order-preserving thread helper.

Work items carry their own derived RNG streams, so results are identical
whether they run sequentially or on a pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    env = os.environ.get("PARTYLINE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_chunks(fn: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    """Map fn over items preserving input order; threads <= 1 runs inline."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
