"""Replicate fan-out with schedule-independent results.

Replicates are cut into fixed-size blocks.  Block ``b`` always draws from
``stream.substream("block", b)`` no matter how many workers run, and results
are gathered in block order, so the output depends on (seed, replicates)
only.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

from .stable_rng import RngStream

BLOCK_SIZE = 2048

_default_threads: Optional[int] = None

T = TypeVar("T")


def set_default_threads(n: Optional[int]) -> None:
    """Set the worker count used when callers pass ``threads=None``."""
    global _default_threads
    if n is not None and n < 1:
        raise ValueError("threads must be >= 1")
    _default_threads = n


def default_threads() -> int:
    if _default_threads is not None:
        return _default_threads
    return os.cpu_count() or 1


def block_sizes(replicates: int, block_size: int = BLOCK_SIZE) -> List[int]:
    full, rem = divmod(replicates, block_size)
    return [block_size] * full + ([rem] if rem else [])


def map_blocks(
    fn: Callable[[RngStream, int], T],
    replicates: int,
    stream: RngStream,
    threads: Optional[int] = None,
    block_size: int = BLOCK_SIZE,
) -> List[T]:
    """Run ``fn(block_stream, block_len)`` over all blocks, results in block order."""
    sizes = block_sizes(replicates, block_size)
    jobs = [(stream.substream("block", b), m) for b, m in enumerate(sizes)]
    workers = min(threads or default_threads(), len(jobs)) if jobs else 1
    if workers <= 1:
        return [fn(s, m) for s, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
