"""Comparison acquisition strategies behind one runner interface.

All strategies break ties by the smallest query id and select models with
the harness's empirical-mean rule. Kind names are CLI-stable:
random, margin, min-agreement, vma, amc (plus select-llm via the selector).

Support scores are the per-query average pairwise similarity of one model's
response to every model's response (self included); margin and min-agreement
rank queries from the tensor alone, vma and amc adapt as annotations arrive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AnnotatedSet,
    OracleScoreMatrix,
    SimilarityTensor,
    Trajectory,
    TrajectoryRecord,
)

BASELINE_KINDS = ("random", "margin", "min-agreement", "vma", "amc")
STRATEGY_KINDS = BASELINE_KINDS + ("select-llm",)


@dataclass(frozen=True)
class SupportScores:
    values: np.ndarray  # (n, m)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def support_scores(tensor: SimilarityTensor) -> SupportScores:
    """Row-wise mean similarity over models, self-similarity included."""
    return SupportScores(tensor.entries.mean(axis=2))


def random_order(n: int, seed) -> np.ndarray:
    """Uniform permutation from numpy's seeded PCG64 generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(n)


def margin_order(support: SupportScores) -> np.ndarray:
    """Queries sorted by the gap between their two highest support values."""
    if support.m < 2:
        raise ValueError("margin ordering needs at least two models")
    top2 = np.partition(support.values, -2, axis=1)[:, -2:]
    gaps = top2[:, 1] - top2[:, 0]
    return np.argsort(gaps, kind="stable")


def min_agreement_order(support: SupportScores) -> np.ndarray:
    """Queries sorted by their maximum support value, least agreed first."""
    return np.argsort(support.values.max(axis=1), kind="stable")


def vma_next(pool, annotated_queries, support: SupportScores) -> int:
    """Query minimizing the summed per-model variance of proxy risks.

    Proxy risk is 1 - support; the variance is the population variance of
    the annotated risks plus the candidate's row.
    """
    pool = np.sort(np.asarray(list(pool), dtype=np.intp))
    if pool.size == 0:
        raise ValueError("pool is empty")
    risks = 1.0 - support.values
    t = len(annotated_queries)
    if t:
        seen = risks[np.asarray(list(annotated_queries), dtype=np.intp)]
        s1, s2 = seen.sum(axis=0), (seen ** 2).sum(axis=0)
    else:
        s1 = s2 = np.zeros(support.m)
    cand = risks[pool]
    count = t + 1
    mean = (s1 + cand) / count
    variance = (s2 + cand ** 2) / count - mean ** 2
    return int(pool[np.argmin(variance.sum(axis=1))])


def amc_next(pool, annotated, support: SupportScores) -> int:
    """Query maximizing the support gap between the current top-2 models.

    Top-2 models come from mean annotated oracle scores; before any
    annotation, from mean support over all queries.
    """
    if support.m < 2:
        raise ValueError("top-2 comparison needs at least two models")
    pool = np.sort(np.asarray(list(pool), dtype=np.intp))
    if pool.size == 0:
        raise ValueError("pool is empty")
    if len(annotated):
        means = annotated.mean_scores()
    else:
        means = support.values.mean(axis=0)
    order = np.argsort(-means, kind="stable")
    top1, top2 = int(order[0]), int(order[1])
    gaps = np.abs(support.values[pool, top1] - support.values[pool, top2])
    return int(pool[np.argmax(gaps)])


def run_baseline(kind: str, tensor: SimilarityTensor, oracle: OracleScoreMatrix,
                 budget: int, rng=None) -> Trajectory:
    """Drive one baseline for `budget` annotations against a score matrix.

    Baselines keep no model posterior, so records carry posterior_after=None.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}")
    n, m = tensor.n, tensor.m
    if budget > n:
        raise ValueError(f"budget {budget} exceeds pool size {n}")

    support = support_scores(tensor)
    static_order: np.ndarray | None = None
    if kind == "random":
        static_order = random_order(n, rng if rng is not None else 0)
    elif kind == "margin":
        static_order = margin_order(support)
    elif kind == "min-agreement":
        static_order = min_agreement_order(support)

    pool = np.arange(n, dtype=np.intp)
    chosen: list[int] = []
    score_sums = np.zeros(m)
    records: list[TrajectoryRecord] = []
    annotated = AnnotatedSet()
    for step in range(budget):
        if static_order is not None:
            query = int(static_order[step])
        elif kind == "vma":
            query = vma_next(pool, chosen, support)
        else:
            query = amc_next(pool, annotated, support)
        row = oracle.row(query)
        annotated = annotated.add(query, row)
        chosen.append(query)
        score_sums += row
        records.append(
            TrajectoryRecord(
                step=step,
                query=query,
                oracle_row=row,
                posterior_after=None,
                empirical_best=int(np.argmax(score_sums)),
                map_best=None,
            )
        )
        pool = pool[pool != query]

    return Trajectory(records=tuple(records), final_posterior=None)
