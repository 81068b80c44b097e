"""Process-wide worker count and an order-preserving parallel map.

Every parallel region splits work into independent items whose results are
written back by index, so outputs never depend on the worker count.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor

_threads = 1
_local = threading.local()


def resolve_threads(n: int | None) -> int:
    """0 or None means one worker per CPU; falls back to $KEDFL_THREADS."""
    if n is None:
        env = os.environ.get("KEDFL_THREADS")
        n = int(env) if env else 1
    if n < 0:
        raise ValueError(f"thread count must be >= 0, got {n}")
    if n == 0:
        n = os.cpu_count() or 1
    return n


def set_threads(n: int | None) -> int:
    global _threads
    _threads = resolve_threads(n)
    return _threads


def get_threads() -> int:
    return _threads


def _run(fn, item):
    _local.inside = True
    try:
        return fn(item)
    finally:
        _local.inside = False


def parallel_map(fn, items) -> list:
    items = list(items)
    n = _threads
    if n <= 1 or len(items) <= 1 or getattr(_local, "inside", False):
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(lambda it: _run(fn, it), items))
