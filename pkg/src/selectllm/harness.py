"""Realization-based evaluation protocol.

A realization is a uniform without-replacement sample of `size` queries from
the bundle's pool. Every method walks the same realization sequence (stream r
is seeded as default_rng([seed, r])), selects queries up to the budget, and
after each step the currently selected model is the one with the highest mean
oracle score over the annotated queries. The true best model of a realization
is the column-mean argmax over all its queries.

Curves report, per budget t, the fraction of realizations identifying the
true best (or a near-best model within a relative gap delta), and the
nearest-rank 95th percentile of the relative score gap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baselines import BASELINE_KINDS, run_baseline
from .core import OracleScoreMatrix, SimilarityTensor, Trajectory
from .parallel import ordered_map
from .selector import matrix_oracle, run_select_llm

DEFAULT_DELTAS = (0.001, 0.005, 0.01)
GAP_LEVELS = (70, 80, 90, 100)


@dataclass(frozen=True)
class RealizationPlan:
    pool_size: int
    size: int
    realizations: int = 1000
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.size > self.pool_size:
            raise ValueError("realization size exceeds pool size")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.budget is not None and self.budget > self.size:
            raise ValueError("budget exceeds realization size")

    @property
    def effective_budget(self) -> int:
        return self.size if self.budget is None else self.budget


@dataclass(frozen=True)
class CurvePoint:
    budget: int
    identification: float
    near_best: dict[float, float] = field(default_factory=dict)
    gap_p95: float | None = None


@dataclass(frozen=True)
class EfficiencyReport:
    budgets: dict[str, int | None]          # labels-to-full per method
    select_llm_budget: int | None
    strongest_baseline: str | None
    strongest_budget: int | None
    reduction: float | None                 # (b_base - b_sel) / b_base

    @property
    def defined(self) -> bool:
        return self.reduction is not None


@dataclass(frozen=True)
class GapResult:
    value: float | None
    excluded: int


@dataclass
class TrialResult:
    plan: RealizationPlan
    subsets: list[np.ndarray]
    true_bests: np.ndarray
    trajectories: dict[str, list[Trajectory]]
    tau: float | None


def sample_realization(pool_size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform n-subset of the pool, returned sorted."""
    if n > pool_size:
        raise ValueError("realization size exceeds pool size")
    return np.sort(rng.choice(pool_size, size=n, replace=False))


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Derived stream for realization `index` under a master seed."""
    return np.random.default_rng([seed, index])


def true_best(oracle: OracleScoreMatrix) -> int:
    """Column-mean argmax; ties go to the smallest model id."""
    if oracle.n == 0:
        raise ValueError("empty realization")
    return int(np.argmax(oracle.entries.mean(axis=0)))


def _run_one_realization(args) -> tuple[np.ndarray, int, dict[str, Trajectory]]:
    tensor, oracle, methods, plan, tau, index = args
    rng = realization_rng(plan.seed, index)
    subset = sample_realization(plan.pool_size, plan.size, rng)
    sub_tensor = tensor.restrict(subset)
    sub_oracle = oracle.restrict(subset)
    budget = plan.effective_budget
    per_method: dict[str, Trajectory] = {}
    for method in methods:
        if method == "select-llm":
            per_method[method] = run_select_llm(
                sub_tensor, matrix_oracle(sub_oracle.entries), tau, budget)
        else:
            per_method[method] = run_baseline(
                method, sub_tensor, sub_oracle, budget,
                rng=np.random.default_rng([plan.seed, index, 7]))
    return subset, true_best(sub_oracle), per_method


def run_trials(bundle, methods: Sequence[str], plan: RealizationPlan,
               tau: float | None = None, threads: int = 1) -> TrialResult:
    """Run every method over the plan's realization sequence.

    `bundle` is anything carrying a .tensor and .oracle pair. Realizations
    are independent work units; results are reduced in realization order, so
    output is identical for any thread count.
    """
    tensor: SimilarityTensor = bundle.tensor
    oracle: OracleScoreMatrix = bundle.oracle
    if tensor.n != oracle.n or tensor.m != oracle.m:
        raise ValueError("bundle tensor and oracle shapes disagree")
    if plan.pool_size != tensor.n:
        raise ValueError("plan pool size does not match the bundle")
    methods = list(methods)
    for method in methods:
        if method != "select-llm" and method not in BASELINE_KINDS:
            raise ValueError(f"unknown method {method!r}")
    if "select-llm" in methods and (tau is None or tau <= 0):
        raise ValueError("select-llm needs a positive tau")

    tasks = [(tensor, oracle, methods, plan, tau, r) for r in range(plan.realizations)]
    results = ordered_map(_run_one_realization, tasks, threads=threads)

    subsets = [r[0] for r in results]
    true_bests = np.array([r[1] for r in results], dtype=np.intp)
    trajectories = {m: [r[2][m] for r in results] for m in methods}
    return TrialResult(plan=plan, subsets=subsets, true_bests=true_bests,
                       trajectories=trajectories, tau=tau)


def _selected_models(trajectories: Sequence[Trajectory]) -> np.ndarray:
    """(realizations, budget) matrix of per-step empirically selected models."""
    return np.stack([t.empirical_best_per_step() for t in trajectories])


def identification_curve(trajectories: Sequence[Trajectory],
                         true_bests: np.ndarray) -> np.ndarray:
    """Fraction of realizations identifying the true best, per budget."""
    if len(trajectories) != len(true_bests):
        raise ValueError("trajectories and true bests are misaligned")
    selected = _selected_models(trajectories)
    return (selected == np.asarray(true_bests)[:, None]).mean(axis=0)


def _realization_means(oracle: OracleScoreMatrix, subsets: Sequence[np.ndarray]) -> np.ndarray:
    """(realizations, m) per-model mean oracle score over each realization."""
    return np.stack([oracle.entries[s].mean(axis=0) for s in subsets])


def near_best_curve(trajectories: Sequence[Trajectory], oracle: OracleScoreMatrix,
                    delta: float, subsets: Sequence[np.ndarray]) -> np.ndarray:
    """Fraction of realizations whose pick scores >= (1 - delta) * best."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    selected = _selected_models(trajectories)
    means = _realization_means(oracle, subsets)
    best = means.max(axis=1)
    picked = np.take_along_axis(means, selected, axis=1)
    return (picked >= (1.0 - delta) * best[:, None]).mean(axis=0)


def labels_to_full(curve: np.ndarray) -> int | None:
    """First budget (1-based) where the curve reaches 1.0; None if never."""
    if len(curve) == 0:
        raise ValueError("empty curve")
    hits = np.flatnonzero(np.asarray(curve) >= 1.0)
    return int(hits[0]) + 1 if hits.size else None


def efficiency(select_llm_budget: int | None,
               baseline_budgets: dict[str, int | None]) -> EfficiencyReport:
    """Label reduction of select-llm against the strongest baseline."""
    budgets = dict(baseline_budgets)
    reached = {k: b for k, b in budgets.items() if b is not None}
    budgets["select-llm"] = select_llm_budget
    if not reached:
        return EfficiencyReport(budgets, select_llm_budget, None, None, None)
    strongest = min(sorted(reached), key=reached.get)
    b_base = reached[strongest]
    reduction = None
    if select_llm_budget is not None:
        reduction = (b_base - select_llm_budget) / b_base
    return EfficiencyReport(budgets, select_llm_budget, strongest, b_base, reduction)


def gap_percentile(trajectories: Sequence[Trajectory], oracle: OracleScoreMatrix,
                   subsets: Sequence[np.ndarray], budget: int, pct: float = 95) -> GapResult:
    """Nearest-rank percentile of (best - selected) / best at a budget.

    Realizations whose best mean score is not positive are excluded and
    counted, since the relative gap is undefined there.
    """
    selected = _selected_models(trajectories)
    if not 1 <= budget <= selected.shape[1]:
        raise ValueError(f"budget {budget} outside the recorded range")
    means = _realization_means(oracle, subsets)
    best = means.max(axis=1)
    picked = np.take_along_axis(means, selected[:, budget - 1][:, None], axis=1)[:, 0]
    valid = best > 0
    excluded = int((~valid).sum())
    if not valid.any():
        return GapResult(None, excluded)
    gaps = np.sort((best[valid] - picked[valid]) / best[valid])
    rank = _nearest_rank(pct, gaps.size)
    return GapResult(float(gaps[rank - 1]), excluded)


def _nearest_rank(pct: float, size: int) -> int:
    # exclusive nearest rank: the value exceeded by at most (100 - pct)% of
    # the sample; floor(p*N) + 1 capped at N (matches ceil(p*N) whenever
    # p*N is fractional)
    return min(size, int(np.floor(pct / 100.0 * size)) + 1)


def gap_curve(trajectories: Sequence[Trajectory], oracle: OracleScoreMatrix,
              subsets: Sequence[np.ndarray], pct: float = 95) -> tuple[np.ndarray, int]:
    """Nearest-rank gap percentile at every budget; returns (values, excluded)."""
    selected = _selected_models(trajectories)
    means = _realization_means(oracle, subsets)
    best = means.max(axis=1)
    picked = np.take_along_axis(means, selected, axis=1)
    valid = best > 0
    excluded = int((~valid).sum())
    if not valid.any():
        return np.full(selected.shape[1], np.nan), excluded
    gaps = (best[valid, None] - picked[valid]) / best[valid, None]
    gaps.sort(axis=0)
    rank = _nearest_rank(pct, gaps.shape[0])
    return gaps[rank - 1], excluded


def first_budget_at(curve: np.ndarray, level: float) -> int | None:
    """First budget (1-based) where the curve reaches `level` (a fraction)."""
    hits = np.flatnonzero(np.asarray(curve) >= level)
    return int(hits[0]) + 1 if hits.size else None


def summarize(result: TrialResult, oracle: OracleScoreMatrix,
              deltas: Sequence[float] = DEFAULT_DELTAS) -> dict:
    """Curves plus efficiency and gap tables for one trial run.

    Gap tables follow the robustness convention: at the budgets where
    select-llm first reaches 70/80/90/100% identification, every method's
    95th-percentile gap is reported.
    """
    methods = list(result.trajectories)
    curves: dict[str, dict] = {}
    ident: dict[str, np.ndarray] = {}
    for method in methods:
        trajs = result.trajectories[method]
        ident[method] = identification_curve(trajs, result.true_bests)
        gaps, excluded = gap_curve(trajs, oracle, result.subsets)
        curves[method] = {
            "identification": ident[method],
            "near_best": {
                d: near_best_curve(trajs, oracle, d, result.subsets) for d in deltas
            },
            "gap_p95": gaps,
            "gap_excluded": excluded,
        }

    budgets = {m: labels_to_full(ident[m]) for m in methods}
    report = None
    if "select-llm" in methods:
        report = efficiency(
            budgets["select-llm"],
            {m: b for m, b in budgets.items() if m != "select-llm"},
        )

    gap_tables: dict[int, dict] = {}
    if "select-llm" in methods:
        for level in GAP_LEVELS:
            at = first_budget_at(ident["select-llm"], level / 100.0)
            if at is None:
                gap_tables[level] = {"budget": None, "gaps": {}, "excluded": {}}
                continue
            gaps, excluded = {}, {}
            for method in methods:
                res = gap_percentile(result.trajectories[method], oracle,
                                     result.subsets, at)
                gaps[method] = res.value
                excluded[method] = res.excluded
            gap_tables[level] = {"budget": at, "gaps": gaps, "excluded": excluded}

    return {
        "curves": curves,
        "labels_to_full": budgets,
        "efficiency": report,
        "gap_tables": gap_tables,
    }
