"""Annotation-free temperature selection.

The tuner never sees real oracle scores. It builds a noisy proxy score for
each (query, model) pair, the model's average response similarity to all
models on that query, then replays the realization protocol against the
proxy for every temperature in the grid. The temperature with the best mean
identification probability across budgets wins; ties prefer the earliest
full-identification budget, then the smaller temperature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import support_scores
from .core import OracleScoreMatrix, SimilarityTensor
from .harness import (
    RealizationPlan,
    TrialResult,
    identification_curve,
    labels_to_full,
    run_trials,
)

DEFAULT_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0, 3.0, 4.0, 5.0)
SWEEP_GRID = (0.1, 0.5, 1.0, 3.0, 5.0)
DEFAULT_REALIZATIONS = 200


@dataclass(frozen=True)
class TauGrid:
    values: tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("temperature grid is empty")
        if any(v <= 0 for v in vals):
            raise ValueError("temperatures must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("temperatures must be strictly ascending")
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TuneResult:
    tau: float
    curves: dict[float, np.ndarray]
    degenerate: bool = False


@dataclass(frozen=True)
class _ProxyBundle:
    tensor: SimilarityTensor
    oracle: OracleScoreMatrix


def proxy_oracle(tensor: SimilarityTensor) -> OracleScoreMatrix:
    """Average-similarity proxy standing in for reference scores."""
    return OracleScoreMatrix(support_scores(tensor).values)


def tune_tau(tensor: SimilarityTensor, grid: TauGrid | None = None,
             realizations: int = DEFAULT_REALIZATIONS,
             realization_size: int | None = None, seed: int = 0,
             threads: int = 1) -> TuneResult:
    """Pick a temperature using proxy scores only.

    All grid points share the same realization sequence. A degenerate proxy
    (every model identical on every query) is flagged and falls back to the
    smallest grid temperature.
    """
    grid = grid if grid is not None else TauGrid()
    size = realization_size if realization_size is not None else tensor.n
    if size > tensor.n:
        raise ValueError(f"realization size {size} exceeds pool size {tensor.n}")
    proxy = proxy_oracle(tensor)
    if np.ptp(proxy.entries, axis=1).max() == 0.0:
        return TuneResult(tau=grid.values[0], curves={}, degenerate=True)

    plan = RealizationPlan(pool_size=tensor.n, size=size,
                           realizations=realizations, seed=seed)
    bundle = _ProxyBundle(tensor=tensor, oracle=proxy)

    curves: dict[float, np.ndarray] = {}
    for tau in grid:
        result = run_trials(bundle, ["select-llm"], plan, tau=tau, threads=threads)
        curves[tau] = identification_curve(result.trajectories["select-llm"],
                                           result.true_bests)

    def rank(tau: float):
        curve = curves[tau]
        full = labels_to_full(curve)
        return (-curve.mean(), full if full is not None else np.inf, tau)

    best = min(grid, key=rank)
    return TuneResult(tau=float(best), curves=curves)


def sensitivity_sweep(tensor: SimilarityTensor, oracle: OracleScoreMatrix,
                      grid: TauGrid | None = None, plan: RealizationPlan | None = None,
                      threads: int = 1) -> dict[float, np.ndarray]:
    """Identification curves of the selector under each temperature.

    Unlike tune_tau this runs against the real oracle scores; it reports
    sensitivity, it does not pick a temperature.
    """
    grid = grid if grid is not None else TauGrid(SWEEP_GRID)
    if plan is None:
        plan = RealizationPlan(pool_size=tensor.n, size=tensor.n, realizations=100)
    bundle = _ProxyBundle(tensor=tensor, oracle=oracle)
    curves: dict[float, np.ndarray] = {}
    for tau in grid:
        result = run_trials(bundle, ["select-llm"], plan, tau=tau, threads=threads)
        curves[tau] = identification_curve(result.trajectories["select-llm"],
                                           result.true_bests)
    return curves
