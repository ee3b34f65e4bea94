"""Order-preserving chunked map over a process pool.

Results are concatenated in chunk order, so output never depends on the
worker count or on which worker finished first.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

CHUNKS_PER_WORKER = 4


def chunked(items: Sequence[T], size: int) -> list[Sequence[T]]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def map_chunks(
    func: Callable[[Sequence[T]], list[R]],
    items: Sequence[T],
    workers: int = 1,
    initializer: Optional[Callable] = None,
    initargs: tuple = (),
) -> list[R]:
    """Apply ``func`` to contiguous chunks of ``items`` and flatten.

    ``func`` must be a module-level function taking a chunk and returning a
    list. ``initializer(*initargs)`` installs per-worker shared state; with
    one worker it runs in the calling process.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    items = list(items)
    if workers == 1 or len(items) < 2:
        if initializer is not None:
            initializer(*initargs)
        return list(func(items)) if items else []
    size = max(1, -(-len(items) // (workers * CHUNKS_PER_WORKER)))
    chunks = chunked(items, size)
    # fork keeps large initargs (indexes, lexicons) out of the pickle path
    ctx = multiprocessing.get_context("fork")
    out: list[R] = []
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx, initializer=initializer, initargs=initargs) as pool:
        for part in pool.map(func, chunks):
            out.extend(part)
    return out
