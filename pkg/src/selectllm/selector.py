"""Greedy query acquisition and the sequential selection loop.

The acquisition rule scores a query by the posterior-weighted expected
agreement between candidate models' responses, ``sum_jk p_j p_k S[q,j,k]``,
and annotates the pool query with the lowest score: the query on which the
currently plausible best models disagree the most.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .core import (
    AnnotatedSet,
    Posterior,
    SimilarityTensor,
    Trajectory,
    TrajectoryRecord,
    posterior_update,
    uniform_prior,
)
from .scoring import pool_scores

OracleFn = Callable[[int], np.ndarray]


def selection_score(query: int, posterior: Posterior, tensor: SimilarityTensor) -> float:
    """Quadratic form p^T S_q p for a single query."""
    if not 0 <= query < tensor.n:
        raise ValueError(f"query {query} out of range [0, {tensor.n})")
    if posterior.m != tensor.m:
        raise ValueError("posterior and tensor disagree on model count")
    s_q = tensor.entries[query]
    return float(posterior.probs @ s_q @ posterior.probs)


def select_next(pool, posterior: Posterior, tensor: SimilarityTensor) -> int:
    """Pool query with minimal selection score; ties go to the smallest id."""
    pool = np.sort(np.asarray(list(pool), dtype=np.intp))
    if pool.size == 0:
        raise ValueError("pool is empty")
    scores, _ = pool_scores(tensor.entries, pool, posterior.probs)
    return int(pool[np.argmin(scores)])


def empirical_best(annotated: AnnotatedSet) -> int:
    """Model with the highest mean oracle score; ties go to the smallest id."""
    return int(np.argmax(annotated.mean_scores()))


def matrix_oracle(entries: np.ndarray) -> OracleFn:
    """Oracle answering from a fixed (n, m) score matrix."""
    arr = np.asarray(entries, dtype=np.float64)

    def oracle(query: int) -> np.ndarray:
        return arr[query]

    return oracle


def run_select_llm(tensor: SimilarityTensor, oracle: OracleFn, tau: float,
                   budget: int, prior: Posterior | None = None) -> Trajectory:
    """Run the sequential loop: select, annotate, update, shrink the pool.

    Produces one record per annotation. If the oracle raises at step t the
    partial trajectory is returned with status "aborted" and the error text.
    """
    n, m = tensor.n, tensor.m
    if budget > n:
        raise ValueError(f"budget {budget} exceeds pool size {n}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    posterior = prior if prior is not None else uniform_prior(m)
    if posterior.m != m:
        raise ValueError("prior and tensor disagree on model count")

    pool = np.arange(n, dtype=np.intp)
    score_sums = np.zeros(m)
    records: list[TrajectoryRecord] = []
    counts: list[int] = []

    for step in range(budget):
        scores, touched = pool_scores(tensor.entries, pool, posterior.probs)
        counts.append(touched)
        pick = int(np.argmin(scores))
        query = int(pool[pick])
        try:
            row = np.asarray(oracle(query), dtype=np.float64)
        except Exception as exc:
            return Trajectory(
                records=tuple(records),
                final_posterior=posterior,
                status="aborted",
                error=f"oracle failed at step {step} (query {query}): {exc}",
                scored_entries=tuple(counts),
            )
        posterior = posterior_update(posterior, row, tau)
        score_sums += row
        records.append(
            TrajectoryRecord(
                step=step,
                query=query,
                oracle_row=row,
                posterior_after=posterior,
                empirical_best=int(np.argmax(score_sums)),
                map_best=posterior.map_model(),
            )
        )
        pool = np.delete(pool, pick)

    return Trajectory(
        records=tuple(records),
        final_posterior=posterior,
        scored_entries=tuple(counts),
    )
