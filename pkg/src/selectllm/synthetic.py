"""Validation lab: exact information gain over binary response spaces.

Over the finite space {0,1}^d the information gain of annotating a query can
be computed exactly: each candidate model induces a likelihood over responses
proportional to exp(cos(r, output)/tau), normalized per (query, model) by
summing over all 2^d vectors (the zero vector contributes exp(0) under the
zero-norm cosine rule). The lab measures how well the cheap quadratic
selection rule preserves the exact-MI query ranking, and numerically checks
the algebraic identities behind the rule's derivation.

Rank-agreement conventions (these matter; ties are common for small m):

* the rule's selected query is the smallest-index minimizer;
* top-1 / top-k recall test whether that query attains the maximal MI value
  (the top-k-th value) up to a 1e-12 relative tolerance;
* Spearman uses average ranks for ties;
* the reported pairwise accuracy is over strictly ordered pairs (pairs tied
  in either ranking are excluded); `pairwise_accuracy` with the half-credit
  tie scheme is also provided.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Posterior
from .parallel import ordered_map

DEFAULT_MODEL_COUNTS = (2, 5, 10, 20)
DEFAULT_MAX_P = {
    2: (0.50, 0.60, 0.70, 0.80, 0.90),
    5: (0.20, 0.35, 0.50, 0.70, 0.90),
    10: (0.10, 0.30, 0.50, 0.70, 0.90),
    20: (0.05, 0.30, 0.50, 0.70, 0.90),
}
_REL_TIE_TOL = 1e-12


@dataclass(frozen=True)
class BinaryResponseSpace:
    """All 2^d bit vectors in integer order (bit k of i at position k)."""

    d: int
    vectors: np.ndarray = field(init=False, repr=False)
    unit: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.d <= 16:
            raise ValueError("d must be in [1, 16]")
        ints = np.arange(2 ** self.d, dtype=np.uint32)
        bits = ((ints[:, None] >> np.arange(self.d)) & 1).astype(np.float64)
        norms = np.sqrt(bits.sum(axis=1, keepdims=True))
        unit = np.divide(bits, norms, out=np.zeros_like(bits), where=norms > 0)
        bits.setflags(write=False)
        unit.setflags(write=False)
        object.__setattr__(self, "vectors", bits)
        object.__setattr__(self, "unit", unit)

    @property
    def size(self) -> int:
        return 2 ** self.d

    def sample_nonzero(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Indices of uniform nonzero vectors."""
        return rng.integers(1, self.size, size=shape)


def skewed_posterior(m: int, max_p: float) -> Posterior:
    """max_p on model 0, remaining mass uniform over the other m - 1."""
    if m < 2:
        raise ValueError("need at least two models")
    if max_p < 1.0 / m:
        raise ValueError(f"max_p={max_p} cannot be the maximum for m={m}")
    if max_p > 1.0:
        raise ValueError("max_p exceeds 1")
    probs = np.full(m, (1.0 - max_p) / (m - 1))
    probs[0] = max_p
    return Posterior(probs)


def likelihood_table(outputs: np.ndarray, tau: float,
                     space: BinaryResponseSpace) -> np.ndarray:
    """(m, 2^d) response likelihoods, each row normalized over the space."""
    out = np.asarray(outputs, dtype=np.float64)
    norms = np.linalg.norm(out, axis=-1, keepdims=True)
    unit = np.divide(out, norms, out=np.zeros_like(out), where=norms > 0)
    scores = unit @ space.unit.T
    table = np.exp(scores / tau)
    table /= table.sum(axis=-1, keepdims=True)
    return table


def exact_mi(outputs: np.ndarray, posterior: Posterior, tau: float,
             space: BinaryResponseSpace) -> float:
    """Exact information gain of annotating a query with these m outputs."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    table = likelihood_table(outputs, tau, space)
    if table.shape[0] != posterior.m:
        raise ValueError("outputs and posterior disagree on model count")
    p = posterior.probs
    mix = p @ table
    value = float(np.einsum("j,jr->", p, table * (np.log(table) - np.log(mix))))
    return value if value > 0.0 else 0.0


def average_ranks(values) -> np.ndarray:
    """1-based ranks, ascending, ties averaged."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sx = x[order]
    base = np.arange(1, x.size + 1, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = base[i:j + 1].mean()
        i = j + 1
    return ranks


def spearman(rank_a, rank_b) -> float:
    """Rank correlation with average ranks for ties."""
    a = np.asarray(rank_a, dtype=np.float64)
    b = np.asarray(rank_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    if a.size < 2:
        raise ValueError("need at least two items")
    ra = average_ranks(a) - (a.size + 1) / 2.0
    rb = average_ranks(b) - (b.size + 1) / 2.0
    den = math.sqrt(float((ra * ra).sum() * (rb * rb).sum()))
    if den == 0.0:
        return 1.0 if (ra == rb).all() else 0.0
    return float((ra * rb).sum() / den)


def _pair_signs(score_a, score_b):
    a = np.asarray(score_a, dtype=np.float64)
    b = np.asarray(score_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    if a.size < 2:
        raise ValueError("need at least two items")
    ii, jj = np.triu_indices(a.size, k=1)
    return np.sign(a[ii] - a[jj]), np.sign(b[ii] - b[jj])


def pairwise_accuracy(score_a, score_b) -> float:
    """Pair ordering agreement: ties in one ranking earn half credit."""
    sa, sb = _pair_signs(score_a, score_b)
    credit = np.where(sa == sb, 1.0, np.where((sa == 0) | (sb == 0), 0.5, 0.0))
    return float(credit.mean())


def strict_pairwise_accuracy(score_a, score_b) -> float:
    """Pair ordering agreement over strictly ordered pairs only."""
    sa, sb = _pair_signs(score_a, score_b)
    strict = (sa != 0) & (sb != 0)
    if not strict.any():
        return 1.0
    return float((sa[strict] == sb[strict]).mean())


@dataclass(frozen=True)
class AgreementReport:
    m: int
    max_p: float
    top1_recall: float
    top5pct_recall: float
    spearman: float
    pairwise_accuracy: float
    seeds: int


@dataclass(frozen=True)
class ValidationConfig:
    d: int = 8
    model_counts: tuple[int, ...] = DEFAULT_MODEL_COUNTS
    max_p: dict[int, tuple[float, ...]] | None = None
    n_syn: int = 100
    tau: float = 1.0
    seeds: int = 2000
    master_seed: int = 0

    def max_p_for(self, m: int) -> tuple[float, ...]:
        if self.max_p is not None:
            return self.max_p[m] if isinstance(self.max_p, dict) else tuple(self.max_p)
        if m not in DEFAULT_MAX_P:
            raise ValueError(f"no default max-p row for m={m}; pass max_p explicitly")
        return DEFAULT_MAX_P[m]


@dataclass(frozen=True)
class ValidationResult:
    reports: tuple[AgreementReport, ...]
    # (m, max_p) -> (rule_ranks, mi_ranks) of the first seed, for scatter plots
    scatter: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]]


def _seed_chunk(args):
    """Agreement metrics for a contiguous seed range of one model count."""
    d, m, max_ps, n_syn, tau, master, lo, hi = args
    space = BinaryResponseSpace(d)
    k = max(1, int(round(0.05 * n_syn)))
    metrics = np.zeros((hi - lo, len(max_ps), 4))
    scatter = {}
    posteriors = [skewed_posterior(m, mp) for mp in max_ps]
    if n_syn == 1:
        # a single candidate query agrees with itself under any ranking
        metrics[:] = 1.0
        for mp in max_ps:
            scatter[(m, mp)] = (np.ones(1), np.ones(1))
        return metrics, scatter
    for s in range(lo, hi):
        rng = np.random.default_rng([master, m, s])
        idx = space.sample_nonzero(rng, (n_syn, m))
        unit = space.unit[idx]                      # (n, m, d)
        cosines = np.einsum("qjd,qkd->qjk", unit, unit)
        scores = np.einsum("qmd,rd->qmr", unit, space.unit)
        table = np.exp(scores / tau)
        table /= table.sum(axis=2, keepdims=True)
        log_table = np.log(table)
        for c, posterior in enumerate(posteriors):
            p = posterior.probs
            rule = np.einsum("qjk,j,k->q", cosines, p, p)
            mix = np.einsum("j,qjr->qr", p, table)
            mi = np.einsum("j,qjr->q", p, table * (log_table - np.log(mix)[:, None, :]))
            sel = int(np.argmin(rule))
            top = mi.max()
            kth = np.partition(mi, -k)[-k]
            metrics[s - lo, c, 0] = mi[sel] >= top - _REL_TIE_TOL * abs(top)
            metrics[s - lo, c, 1] = mi[sel] >= kth - _REL_TIE_TOL * abs(kth)
            metrics[s - lo, c, 2] = spearman(rule, -mi)
            metrics[s - lo, c, 3] = strict_pairwise_accuracy(-rule, mi)
            if s == 0:
                scatter[(m, max_ps[c])] = (average_ranks(rule), average_ranks(-mi))
    return metrics, scatter


def run_validation(config: ValidationConfig | None = None,
                   threads: int = 1) -> ValidationResult:
    """Rank agreement between the quadratic rule and exact MI.

    Seeds are independent units; seed s of model count m always uses the
    stream default_rng([master_seed, m, s]), so results are identical for
    any thread count.
    """
    config = config if config is not None else ValidationConfig()
    if config.n_syn < 1:
        raise ValueError("need at least one query")
    # within one model count, every posterior setting shares each seed's
    # sampled outputs and likelihood tables
    reports: list[AgreementReport] = []
    scatter: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]] = {}
    chunk = 64
    for m in config.model_counts:
        max_ps = config.max_p_for(m)
        for mp in max_ps:
            if mp < 1.0 / m:
                raise ValueError(f"max_p={mp} cannot be the maximum for m={m}")
        tasks = [
            (config.d, m, max_ps, config.n_syn, config.tau, config.master_seed,
             lo, min(lo + chunk, config.seeds))
            for lo in range(0, config.seeds, chunk)
        ]
        results = ordered_map(_seed_chunk, tasks, threads=threads)
        metrics = np.concatenate([r[0] for r in results], axis=0)
        for r in results:
            scatter.update(r[1])
        means = metrics.mean(axis=0)
        for c, mp in enumerate(max_ps):
            reports.append(AgreementReport(
                m=m, max_p=mp,
                top1_recall=float(means[c, 0]),
                top5pct_recall=float(means[c, 1]),
                spearman=float(means[c, 2]),
                pairwise_accuracy=float(means[c, 3]),
                seeds=config.seeds,
            ))
    return ValidationResult(reports=tuple(reports), scatter=scatter)


def rule_mi_argext_match(d: int, instances: int, seed: int = 0,
                         pool_size: int = 2, tau: float = 1.0) -> float:
    """Fraction of random two-model instances where the rule's argmin agrees
    with the exact-MI argmax.

    Each instance is a pool of `pool_size` candidate queries with uniform
    posterior over two models. A tie in either objective counts as agreement:
    a tied objective cannot prefer one of the tied queries over another.
    """
    space = BinaryResponseSpace(d)
    p = np.array([0.5, 0.5])
    hits = 0
    for s in range(instances):
        rng = np.random.default_rng([seed, d, s])
        idx = space.sample_nonzero(rng, (pool_size, 2))
        unit = space.unit[idx]
        cosines = np.einsum("qjd,qkd->qjk", unit, unit)
        rule = np.einsum("qjk,j,k->q", cosines, p, p)
        scores = np.einsum("qmd,rd->qmr", unit, space.unit)
        table = np.exp(scores / tau)
        table /= table.sum(axis=2, keepdims=True)
        mix = np.einsum("j,qjr->qr", p, table)
        mi = np.einsum("j,qjr->q", p, table * (np.log(table) - np.log(mix)[:, None, :]))
        sel, best = int(np.argmin(rule)), int(np.argmax(mi))
        if sel == best or rule[best] == rule.min() or mi[sel] == mi.max():
            hits += 1
    return hits / instances


@dataclass(frozen=True)
class DerivationReport:
    taylor_ok: bool
    variance_identity_ok: bool
    kernel_identity_ok: bool
    max_variance_gap: float
    max_kernel_gap: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.taylor_ok and self.variance_identity_ok and self.kernel_identity_ok


def taylor_remainder_bound(x: np.ndarray) -> np.ndarray:
    """Lagrange bound for the quadratic expansion of x log x near 1.

    |x log x - ((x-1) + (x-1)^2/2)| <= max|g'''| / 6 * |x-1|^3 with
    g'''(t) = -1/t^2, maximized at the interval's left edge.
    """
    left = np.minimum(x, 1.0)
    return np.abs(x - 1.0) ** 3 / (6.0 * left ** 2)


def derivation_checks(seed: int = 0, samples: int = 10_000,
                      tol: float = 1e-12) -> DerivationReport:
    """Numerical checks of the three identities used to derive the rule.

    (a) the second-order expansion of x log x obeys its cubic remainder
        bound for |x - 1| <= 0.2;
    (b) the weighted variance identity
        sum_j w_j (a_j - abar)^2 = 1/2 sum_jk w_j w_k (a_j - a_k)^2;
    (c) for unit-normalized vectors, ||u - v||^2 = 2 (1 - cos(u, v)).
    """
    rng = np.random.default_rng(seed)

    x = rng.uniform(0.8, 1.2, size=samples)
    residual = np.abs(x * np.log(x) - ((x - 1) + 0.5 * (x - 1) ** 2))
    taylor_ok = bool((residual <= taylor_remainder_bound(x) + 1e-15).all())

    max_variance_gap = 0.0
    max_kernel_gap = 0.0
    for _ in range(samples):
        m = int(rng.integers(2, 9))
        w = rng.dirichlet(np.ones(m))
        a = rng.uniform(-2.0, 2.0, size=m)
        lhs = float(w @ (a - w @ a) ** 2)
        rhs = 0.5 * float(np.einsum("j,k,jk->", w, w, (a[:, None] - a[None, :]) ** 2))
        max_variance_gap = max(max_variance_gap, abs(lhs - rhs))

        d = int(rng.integers(2, 12))
        x1 = rng.integers(0, 2, size=d).astype(np.float64)
        x2 = rng.integers(0, 2, size=d).astype(np.float64)
        if x1.sum() == 0 or x2.sum() == 0:
            continue
        u, v = x1 / np.linalg.norm(x1), x2 / np.linalg.norm(x2)
        gap = abs(float(((u - v) ** 2).sum()) - 2.0 * (1.0 - float(u @ v)))
        max_kernel_gap = max(max_kernel_gap, gap)

    return DerivationReport(
        taylor_ok=taylor_ok,
        variance_identity_ok=max_variance_gap <= tol,
        kernel_identity_ok=max_kernel_gap <= tol,
        max_variance_gap=max_variance_gap,
        max_kernel_gap=max_kernel_gap,
        samples=samples,
    )
