"""Pool-scoring backend selection.

The hot loop of the selector evaluates the quadratic form ``p^T S_q p`` for
every query left in the pool, once per step. A compiled extension implements
it when built; a numpy einsum path is the fallback. Both report how many
tensor entries they touched so per-step work can be checked against the
expected (pool size) * m^2 budget.

Set ``SELECTLLM_PURE=1`` to force the fallback (used by the benchmark).
"""
from __future__ import annotations

import os

import numpy as np

try:
    from . import _scoring_c
except ImportError:  # extension not built; numpy path only
    _scoring_c = None


def compiled_available() -> bool:
    return _scoring_c is not None


def default_backend() -> str:
    if os.environ.get("SELECTLLM_PURE"):
        return "numpy"
    return "compiled" if compiled_available() else "numpy"


def pool_scores(entries: np.ndarray, pool: np.ndarray, probs: np.ndarray,
                backend: str | None = None) -> tuple[np.ndarray, int]:
    """Score every pool query; returns (scores, tensor entries touched)."""
    backend = backend or default_backend()
    pool = np.ascontiguousarray(pool, dtype=np.intp)
    if backend == "compiled":
        if _scoring_c is None:
            raise RuntimeError("compiled scoring backend is not built")
        out = np.empty(pool.shape[0])
        touched = _scoring_c.pool_scores(entries, pool, probs, out)
        return out, int(touched)
    if backend == "numpy":
        sub = entries[pool]
        scores = np.einsum("qjk,j,k->q", sub, probs, probs)
        return scores, sub.size
    raise ValueError(f"unknown scoring backend {backend!r}")
