"""Deterministic parallel map over independent work items (ladder points, cells)."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "parallel_map", "THREADS_ENV"]

THREADS_ENV = "COLOMBEAU_THREADS"


def thread_count() -> int:
    """Worker threads from ``COLOMBEAU_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]``, results in input order whatever the thread count."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
