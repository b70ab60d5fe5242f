"""Worker-count control via the ZEROPHASE_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_cap() -> int:
    """Parallelism cap; defaults to 1 (serial) when unset or invalid."""
    raw = os.environ.get("ZEROPHASE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Apply fn to items, possibly in parallel, merging in input order.

    Results are deterministic regardless of the worker count because the
    items are independent and the merge preserves input order.
    """
    workers = min(thread_cap(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
