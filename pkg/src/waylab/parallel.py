"""Ordered thread-pool map honouring the WAYLAB_THREADS cap."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "WAYLAB_THREADS"


def thread_count(default: int | None = None) -> int:
    """Worker count from WAYLAB_THREADS (0 or unset means auto)."""
    raw = os.environ.get(ENV_VAR, "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        n = 0
    if n <= 0:
        n = default if default else (os.cpu_count() or 1)
    return max(1, n)


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Apply ``func`` to every item, possibly in parallel; results keep input order."""
    items = list(items)
    n = thread_count() if threads is None else max(1, threads)
    if n == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(func, items))
