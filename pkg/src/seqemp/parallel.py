"""Deterministic replicate chunking.

Replicates are split into fixed-size chunks independent of the worker count,
and chunk results are reduced in chunk order, so output never depends on
scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

CHUNK = 2000


def chunks(total: int, size: int = CHUNK) -> list[tuple[int, int]]:
    """``(start, count)`` pairs covering ``0 .. total - 1``."""
    if total < 0:
        raise ValueError("negative replicate count")
    return [(s, min(size, total - s)) for s in range(0, total, size)]


def map_chunks(fn: Callable[[int, int], object], total: int, threads: int = 1,
               size: int = CHUNK) -> list:
    """``[fn(start, count) for each chunk]`` in chunk order."""
    parts = chunks(total, size)
    if threads <= 1 or len(parts) <= 1:
        return [fn(s, c) for s, c in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sc: fn(*sc), parts))
