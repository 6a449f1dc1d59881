"""Deterministic fan-out over independent work units.

Results always come back in submission order, so any reduction downstream is
identical whether work ran on one thread or many.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit flag, then SELECTLLM_THREADS, then CPU count."""
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("SELECTLLM_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"SELECTLLM_THREADS={env!r} is not an integer")
        if value > 0:
            return value
    return os.cpu_count() or 1


def ordered_map(fn, items, threads: int = 1) -> list:
    """Map fn over items, preserving order; processes when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (threads * 4))))
