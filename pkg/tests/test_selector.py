import numpy as np
import pytest

from selectllm.core import AnnotatedSet, Posterior, SimilarityTensor, uniform_prior
from selectllm.scoring import compiled_available, pool_scores
from selectllm.selector import (
    empirical_best,
    matrix_oracle,
    run_select_llm,
    select_next,
    selection_score,
)


def tensor_from_offdiag(offdiags):
    """One 2-model matrix per query with unit diagonal."""
    n = len(offdiags)
    entries = np.empty((n, 2, 2))
    for i, c in enumerate(offdiags):
        entries[i] = [[1.0, c], [c, 1.0]]
    return SimilarityTensor(entries)


class TestSelectionScore:
    def test_hand_value(self):
        tensor = tensor_from_offdiag([0.2])
        p = uniform_prior(2)
        assert selection_score(0, p, tensor) == pytest.approx(0.6)

    def test_concentrated_posterior_sees_self_similarity(self):
        tensor = tensor_from_offdiag([0.37])
        p = Posterior(np.array([1.0, 0.0]))
        assert selection_score(0, p, tensor) == pytest.approx(1.0)

    def test_constant_tensor(self):
        tensor = SimilarityTensor(np.ones((1, 4, 4)))
        assert selection_score(0, uniform_prior(4), tensor) == pytest.approx(1.0)

    def test_out_of_range(self):
        tensor = tensor_from_offdiag([0.2])
        with pytest.raises(ValueError):
            selection_score(5, uniform_prior(2), tensor)

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 7))
            tensor = SimilarityTensor(rng.uniform(-1, 1, (n, m, m)))
            p = Posterior(rng.dirichlet(np.ones(m)))
            q = int(rng.integers(0, n))
            brute = sum(
                p.probs[j] * p.probs[k] * tensor.entries[q, j, k]
                for j in range(m) for k in range(m)
            )
            assert selection_score(q, p, tensor) == pytest.approx(brute, abs=1e-12)


class TestSelectNext:
    def test_prefers_lower_agreement(self):
        tensor = tensor_from_offdiag([0.2, 0.9])
        assert select_next({0, 1}, uniform_prior(2), tensor) == 0

    def test_tie_break_smallest_id(self):
        tensor = tensor_from_offdiag([0.3, 0.8, 0.5])
        p = Posterior(np.array([1.0, 0.0]))  # all scores tie at 1.0
        assert select_next({0, 1, 2}, p, tensor) == 0
        assert select_next({2, 1}, p, tensor) == 1

    def test_singleton_pool(self):
        tensor = tensor_from_offdiag([0.1] * 8)
        assert select_next({7}, uniform_prior(2), tensor) == 7

    def test_empty_pool(self):
        tensor = tensor_from_offdiag([0.1])
        with pytest.raises(ValueError):
            select_next(set(), uniform_prior(2), tensor)


class TestEmpiricalBest:
    def test_single_row(self):
        assert empirical_best(AnnotatedSet(((0, np.array([0.2, 0.9])),))) == 1

    def test_tie_break(self):
        items = AnnotatedSet(((0, np.array([1.0, 0.0])), (1, np.array([0.0, 1.0]))))
        assert empirical_best(items) == 0

    def test_hand_average(self):
        items = AnnotatedSet(((0, np.array([0.5, 0.4])), (1, np.array([0.1, 0.6]))))
        assert empirical_best(items) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_best(AnnotatedSet())


class TestRunSelectLlm:
    ORACLE = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.5]])
    TENSOR = tensor_from_offdiag([0.1, 0.5, 0.9])

    def test_zero_budget(self):
        traj = run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 1.0, budget=0)
        assert len(traj) == 0
        assert traj.status == "complete"
        assert traj.map_best == 0  # uniform prior argmax tie -> smallest index
        assert traj.empirical_best is None

    def test_hand_simulated_golden_run(self):
        # manual walk of the loop, posteriors recomputed in closed form here
        traj = run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 1.0, budget=3)
        assert traj.queries() == [0, 1, 2]

        w0 = np.array([0.5 * np.exp(0.9), 0.5 * np.exp(0.1)])
        p0 = w0 / w0.sum()
        assert np.allclose(traj.records[0].posterior_after.probs, p0, atol=1e-12)
        assert p0[0] == pytest.approx(0.6899744811276125, abs=1e-12)
        assert traj.records[0].empirical_best == 0
        assert traj.records[0].map_best == 0

        w1 = p0 * np.exp([0.2, 0.8])
        p1 = w1 / w1.sum()
        assert np.allclose(traj.records[1].posterior_after.probs, p1, atol=1e-12)
        assert traj.records[1].empirical_best == 0

        w2 = p1 * np.exp([0.6, 0.5])
        p2 = w2 / w2.sum()
        assert np.allclose(traj.records[2].posterior_after.probs, p2, atol=1e-12)
        assert traj.records[2].empirical_best == 0
        assert traj.map_best == 0

    def test_dominant_model_posterior_grows_monotonically(self):
        rng = np.random.default_rng(3)
        n = 12
        oracle = np.column_stack([rng.uniform(0.6, 1.0, n), rng.uniform(0.0, 0.4, n)])
        tensor = tensor_from_offdiag(rng.uniform(0, 1, n))
        traj = run_select_llm(tensor, matrix_oracle(oracle), 1.0, budget=n)
        probs = [r.posterior_after.probs[0] for r in traj.records]
        assert all(b > a for a, b in zip(probs, probs[1:]))
        assert all(r.map_best == 0 for r in traj.records)

    def test_budget_prefix_property(self):
        full = run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 0.7, budget=3)
        short = run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 0.7, budget=2)
        assert full.queries()[:2] == short.queries()
        for a, b in zip(short.records, full.records[:2]):
            assert np.array_equal(a.posterior_after.probs, b.posterior_after.probs)

    def test_oracle_failure_aborts_with_partial_trajectory(self):
        def oracle(query):
            if query == 1:
                raise RuntimeError("annotator went home")
            return self.ORACLE[query]

        traj = run_select_llm(self.TENSOR, oracle, 1.0, budget=3)
        assert traj.status == "aborted"
        assert "annotator went home" in traj.error
        assert traj.queries() == [0]

    def test_budget_exceeding_pool_rejected(self):
        with pytest.raises(ValueError):
            run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 1.0, budget=4)

    def test_per_step_scored_entry_counts(self):
        traj = run_select_llm(self.TENSOR, matrix_oracle(self.ORACLE), 1.0, budget=3)
        n, m = 3, 2
        assert list(traj.scored_entries) == [(n - t) * m * m for t in range(3)]


class TestInvariances:
    def test_similarity_shift_leaves_choice_unchanged(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n, m = int(rng.integers(2, 8)), int(rng.integers(2, 5))
            base = rng.uniform(0, 1, (n, m, m))
            base = 0.5 * (base + np.swapaxes(base, 1, 2))
            p = Posterior(rng.dirichlet(np.ones(m)))
            c = float(rng.uniform(-0.5, 0.5))
            pool = set(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
            a = select_next(pool, p, SimilarityTensor(base))
            b = select_next(pool, p, SimilarityTensor(base + c))
            assert a == b
            # and every score shifts by exactly c (sum of p_j p_k is 1)
            q = next(iter(pool))
            s1 = selection_score(q, p, SimilarityTensor(base))
            s2 = selection_score(q, p, SimilarityTensor(base + c))
            assert s2 - s1 == pytest.approx(c, abs=1e-12)

    def test_model_permutation_equivariance(self):
        rng = np.random.default_rng(23)
        n, m = 6, 4
        entries = rng.uniform(0, 1, (n, m, m))
        entries = 0.5 * (entries + np.swapaxes(entries, 1, 2))
        oracle = rng.uniform(0, 1, (n, m))
        tensor = SimilarityTensor(entries)
        traj = run_select_llm(tensor, matrix_oracle(oracle), 0.9, budget=n)

        perm = np.array([2, 0, 3, 1])
        permuted_tensor = SimilarityTensor(entries[:, perm][:, :, perm])
        permuted_oracle = oracle[:, perm]
        traj_p = run_select_llm(permuted_tensor, matrix_oracle(permuted_oracle), 0.9, budget=n)

        assert traj.queries() == traj_p.queries()
        for a, b in zip(traj.records, traj_p.records):
            assert perm[b.empirical_best] == a.empirical_best
            assert perm[b.map_best] == a.map_best
            assert np.allclose(a.posterior_after.probs[perm], b.posterior_after.probs)


class TestScoringBackends:
    def test_backends_agree(self):
        if not compiled_available():
            pytest.skip("compiled kernel not built")
        rng = np.random.default_rng(31)
        for _ in range(50):
            n, m = int(rng.integers(1, 40)), int(rng.integers(1, 12))
            entries = rng.uniform(-1, 1, (n, m, m))
            pool = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            probs = rng.dirichlet(np.ones(m))
            fast, count_fast = pool_scores(entries, pool, probs, backend="compiled")
            slow, count_slow = pool_scores(entries, pool, probs, backend="numpy")
            assert count_fast == count_slow == pool.size * m * m
            assert np.abs(fast - slow).max() <= 1e-12
            assert np.argmin(fast) == np.argmin(slow)
