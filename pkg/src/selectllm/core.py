"""Shared value types and posterior arithmetic.

Everything here is an immutable value: arrays are frozen on construction and
all updates build new objects. The posterior over candidate models is updated
multiplicatively with temperature-scaled exponential factors, computed with a
max-shifted exponent so extreme score/temperature ratios stay finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SimilarityTensor:
    """Per-query m x m matrix of pairwise response similarities."""

    entries: np.ndarray  # (n, m, m)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"similarity tensor must be (n, m, m), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("similarity tensor contains non-finite entries")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def symmetrized(self) -> "SimilarityTensor":
        """Average each per-query matrix with its transpose."""
        sym = 0.5 * (self.entries + np.swapaxes(self.entries, 1, 2))
        return SimilarityTensor(sym)

    def restrict(self, queries: Sequence[int]) -> "SimilarityTensor":
        return SimilarityTensor(self.entries[np.asarray(queries, dtype=np.intp)])


@dataclass(frozen=True)
class OracleScoreMatrix:
    """n x m matrix of reference-vs-model scores."""

    entries: np.ndarray  # (n, m)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"oracle matrix must be (n, m), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("oracle matrix contains non-finite entries")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def row(self, query: int) -> np.ndarray:
        return self.entries[query]

    def restrict(self, queries: Sequence[int]) -> "OracleScoreMatrix":
        return OracleScoreMatrix(self.entries[np.asarray(queries, dtype=np.intp)])


@dataclass(frozen=True)
class Posterior:
    """Probability vector over which candidate model is best."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("posterior must be a non-empty vector")
        if np.isnan(arr).any():
            raise ValueError("posterior contains NaN")
        if (arr < 0).any() or (arr > 1).any():
            raise ValueError("posterior entries must lie in [0, 1]")
        if abs(arr.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"posterior sums to {arr.sum()!r}, not 1")
        object.__setattr__(self, "probs", _frozen(arr))

    @property
    def m(self) -> int:
        return self.probs.size

    def map_model(self) -> int:
        """Most probable model; ties go to the smallest index."""
        return int(np.argmax(self.probs))


@dataclass(frozen=True)
class AnnotatedSet:
    """Ordered annotations: (query id, oracle row) pairs with distinct queries."""

    items: tuple[tuple[int, np.ndarray], ...] = ()

    def __post_init__(self):
        queries = [q for q, _ in self.items]
        if len(set(queries)) != len(queries):
            raise ValueError("annotated queries must be distinct")
        frozen = tuple(
            (int(q), _frozen(np.array(row, dtype=np.float64))) for q, row in self.items
        )
        object.__setattr__(self, "items", frozen)

    def __len__(self) -> int:
        return len(self.items)

    def queries(self) -> list[int]:
        return [q for q, _ in self.items]

    def add(self, query: int, oracle_row: np.ndarray) -> "AnnotatedSet":
        return AnnotatedSet(self.items + ((query, oracle_row),))

    def mean_scores(self) -> np.ndarray:
        """Per-model mean oracle score over the annotated queries."""
        if not self.items:
            raise ValueError("no annotations")
        return np.mean([row for _, row in self.items], axis=0)


@dataclass(frozen=True)
class SessionState:
    """Loop state of one sequential selection run."""

    pool: frozenset[int]
    annotated: AnnotatedSet
    posterior: Posterior
    tau: float
    budget: int

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if len(self.annotated) > self.budget:
            raise ValueError("annotations exceed budget")
        overlap = self.pool & set(self.annotated.queries())
        if overlap:
            raise ValueError(f"queries both pooled and annotated: {sorted(overlap)}")

    @property
    def step(self) -> int:
        return len(self.annotated)

    @classmethod
    def fresh(cls, n: int, m: int, tau: float, budget: int,
              prior: "Posterior | None" = None) -> "SessionState":
        if budget > n:
            raise ValueError(f"budget {budget} exceeds pool size {n}")
        return cls(
            pool=frozenset(range(n)),
            annotated=AnnotatedSet(),
            posterior=prior if prior is not None else uniform_prior(m),
            tau=float(tau),
            budget=int(budget),
        )


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    query: int
    oracle_row: np.ndarray
    posterior_after: Posterior | None
    empirical_best: int
    map_best: int | None


@dataclass(frozen=True)
class Trajectory:
    """Materialized record of one selection run, one record per annotation.

    Baseline strategies do not maintain a posterior; their records carry
    ``posterior_after=None`` and ``map_best=None``.
    """

    records: tuple[TrajectoryRecord, ...]
    final_posterior: Posterior | None
    status: str = "complete"  # "complete" or "aborted"
    error: str | None = None
    scored_entries: tuple[int, ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def map_best(self) -> int | None:
        if self.final_posterior is None:
            return None
        return self.final_posterior.map_model()

    @property
    def empirical_best(self) -> int | None:
        if not self.records:
            return None
        return self.records[-1].empirical_best

    def queries(self) -> list[int]:
        return [r.query for r in self.records]

    def empirical_best_per_step(self) -> np.ndarray:
        return np.array([r.empirical_best for r in self.records], dtype=np.intp)


def uniform_prior(m: int) -> Posterior:
    """Uniform posterior over m candidate models."""
    if m < 1:
        raise ValueError("need at least one model")
    return Posterior(np.full(m, 1.0 / m))


def posterior_update(p: Posterior, oracle_row: np.ndarray, tau: float) -> Posterior:
    """One multiplicative Bayes update from a single oracle score row.

    New weights are ``p_j * exp(o_j / tau)`` renormalized; the exponent is
    shifted by the max score over supported entries so magnitudes up to
    |o/tau| ~ 500 stay finite. Zero-probability entries stay exactly zero.
    """
    row = np.asarray(oracle_row, dtype=np.float64)
    if row.shape != (p.m,):
        raise ValueError(f"oracle row has shape {row.shape}, expected ({p.m},)")
    if not np.isfinite(row).all():
        raise ValueError("oracle row contains non-finite scores")
    if tau <= 0:
        raise ValueError("tau must be positive")

    support = p.probs > 0
    shift = row[support].max()
    weights = np.zeros(p.m)
    weights[support] = p.probs[support] * np.exp((row[support] - shift) / tau)
    return Posterior(weights / weights.sum())


def batch_posterior(prior: Posterior, annotated: AnnotatedSet | Iterable, tau: float) -> Posterior:
    """Fold posterior_update over an annotated set (order-insensitive)."""
    items = annotated.items if isinstance(annotated, AnnotatedSet) else tuple(annotated)
    p = prior
    for _, row in items:
        p = posterior_update(p, row, tau)
    return p
