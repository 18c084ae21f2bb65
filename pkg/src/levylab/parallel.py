"""Fixed path chunking and an order-preserving worker pool.

Chunk boundaries depend only on the path count and chunk size, and results
come back in chunk order, so the worker count never changes what gets merged
or in which order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, Tuple

DEFAULT_CHUNK = 64


def chunk_ranges(paths: int, chunk: int = DEFAULT_CHUNK) -> List[Tuple[int, int]]:
    if paths < 1:
        raise ValueError(f"paths must be >= 1, got {paths}")
    if chunk < 1:
        raise ValueError(f"chunk must be >= 1, got {chunk}")
    return [(lo, min(lo + chunk, paths)) for lo in range(0, paths, chunk)]


def map_chunks(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally spread over processes."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        try:
            return list(pool.map(fn, tasks))
        except BaseException:
            pool.shutdown(wait=False, cancel_futures=True)
            raise
