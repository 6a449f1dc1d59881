from itertools import combinations

import numpy as np
import pytest

from selectllm.metrics import (
    MetricKind,
    bleu4,
    bleu_n,
    build_oracle_matrix,
    build_similarity_tensor,
    cosine_binary,
    exact_match,
    lcs_length,
    rouge_l,
    rouge_n,
    score_pair,
    token_f1,
    tokenize,
)


def brute_force_lcs(a: list[str], b: list[str]) -> int:
    """Independent oracle: enumerate subsequences of the shorter side."""
    if len(a) > len(b):
        a, b = b, a
    best = 0
    for k in range(len(a), 0, -1):
        for picks in combinations(range(len(a)), k):
            sub = [a[i] for i in picks]
            it = iter(b)
            if all(tok in it for tok in sub):
                best = k
                break
        if best:
            break
    return best


class TestTokenize:
    def test_punctuation_strip(self):
        assert tokenize("The cat sat.") == ["the", "cat", "sat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_collapse_keeps_duplicates(self):
        assert tokenize("  a  a ") == ["a", "a"]

    def test_unicode_whitespace_and_punct(self):
        assert tokenize("Voilà ! «quoted»") == ["voilà", "quoted"]

    def test_inner_punctuation_kept(self):
        assert tokenize("don't stop-me now...") == ["don't", "stop-me", "now"]

    def test_reserialization_stable(self):
        for text in ("The cat sat.", "a,b c!  d's", "ONE two THREE."):
            tokens = tokenize(text)
            assert tokenize(" ".join(tokens)) == tokens


class TestExactMatch:
    def test_identity(self):
        assert exact_match("Paris", "Paris") == 1.0

    def test_case_sensitive(self):
        assert exact_match("Paris", "paris") == 0.0

    def test_trims_surrounding_whitespace(self):
        assert exact_match(" Paris ", "Paris") == 1.0


class TestTokenF1:
    def test_identity(self):
        assert token_f1("the cat", "the cat") == 1.0

    def test_half_overlap(self):
        assert token_f1("a b", "b c") == 0.5

    def test_disjoint(self):
        assert token_f1("a", "b") == 0.0

    def test_empty_both(self):
        assert token_f1("", "") == 0.0

    def test_multiset_clipping(self):
        # candidate "a a" vs reference "a": overlap 1, p=1/2, r=1 -> 2/3
        assert token_f1("a a", "a") == pytest.approx(2 / 3)


class TestBleu:
    def test_identical_long_enough(self):
        assert bleu4("the cat sat on the mat", "the cat sat on the mat") == 1.0

    def test_no_shared_tokens(self):
        assert bleu4("wholly different words here", "the cat sat on a mat") == 0.0

    def test_golden_value(self):
        # hand-enumerated clipped precisions: p1=5/6, p2=3/5, p3=1/2, p4=1/3,
        # BP=1 (equal lengths) -> (5/6 * 3/5 * 1/2 * 1/3) ** 0.25 = (1/12) ** 0.25
        value = bleu4("the cat sat on the mat", "the cat sat on a mat")
        assert value == pytest.approx((1.0 / 12.0) ** 0.25, abs=1e-12)

    def test_short_candidate_scores_zero_without_smoothing(self):
        assert bleu4("the cat", "the cat") == 0.0

    def test_empty_candidate(self):
        assert bleu4("", "anything") == 0.0

    def test_brevity_penalty(self):
        # candidate one token shorter than the reference, perfect precisions
        value = bleu_n("a b c d", "a b c d e", max_order=2)
        p2 = 3 / 3
        p1 = 4 / 4
        bp = np.exp(1 - 5 / 4)
        assert value == pytest.approx(bp * (p1 * p2) ** 0.5, abs=1e-12)

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            bleu_n("a", "a", max_order=2, weights=[0.9, 0.2])
        with pytest.raises(ValueError):
            bleu_n("a", "a", max_order=2, weights=[1.1, -0.1])
        with pytest.raises(ValueError):
            bleu_n("a", "a", max_order=0)


class TestRougeN:
    def test_identity(self):
        assert rouge_n("a b c", "a b c", 1) == 1.0

    def test_disjoint(self):
        assert rouge_n("a b", "c d", 1) == 0.0

    def test_bigram_half(self):
        assert rouge_n("a b c", "a b d", 2) == 0.5

    def test_reference_without_ngrams(self):
        assert rouge_n("a b", "", 1) == 0.0
        assert rouge_n("a b", "x", 2) == 0.0


class TestRougeL:
    def test_identity(self):
        assert rouge_l("a b c", "a b c") == 1.0

    def test_hand_value(self):
        # LCS=2, P=1, R=2/3 -> F = 0.8
        assert rouge_l("a c", "a b c") == pytest.approx(0.8)

    def test_no_common_subsequence(self):
        assert rouge_l("x", "y") == 0.0

    def test_empty_side(self):
        assert rouge_l("", "a") == 0.0

    def test_against_brute_force(self):
        rng = np.random.default_rng(99)
        vocab = list("abcdef")
        for _ in range(1000):
            a = [vocab[i] for i in rng.integers(0, len(vocab), rng.integers(0, 9))]
            b = [vocab[i] for i in rng.integers(0, len(vocab), rng.integers(0, 9))]
            assert lcs_length(a, b) == brute_force_lcs(a, b)


class TestCosineBinary:
    def test_identity(self):
        assert cosine_binary([1, 0, 1], [1, 0, 1]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_binary([1, 0, 0], [0, 1, 0]) == 0.0

    def test_half(self):
        assert cosine_binary([1, 1, 0], [1, 0, 1]) == pytest.approx(0.5)

    def test_zero_norm(self):
        assert cosine_binary([0, 0], [1, 0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine_binary([1, 0], [1, 0, 1])


class TestBuilders:
    def test_oracle_all_ones_on_exact_matches(self):
        responses = [["yes", "yes"], ["no", "no"]]
        matrix = build_oracle_matrix(responses, ["yes", "no"], MetricKind.EXACT_MATCH)
        assert np.array_equal(matrix.entries, np.ones((2, 2)))

    def test_oracle_token_f1_row(self):
        matrix = build_oracle_matrix([["a b", "b c"]], ["b c"], MetricKind.TOKEN_F1)
        assert np.allclose(matrix.entries, [[0.5, 1.0]])

    def test_oracle_empty_response_bleu(self):
        matrix = build_oracle_matrix([["", "w x y z"]], ["w x y z"], MetricKind.BLEU4)
        assert matrix.entries[0, 0] == 0.0
        assert matrix.entries[0, 1] == 1.0

    def test_oracle_missing_reference(self):
        with pytest.raises(ValueError):
            build_oracle_matrix([["a"]], [None], MetricKind.TOKEN_F1)

    def test_oracle_precomputed_rejected(self):
        with pytest.raises(ValueError):
            build_oracle_matrix([["a"]], ["a"], MetricKind.PRECOMPUTED)

    def test_tensor_identical_responses(self):
        tensor = build_similarity_tensor([["same text", "same text"]], MetricKind.TOKEN_F1)
        assert tensor.entries[0, 0, 1] == 1.0

    def test_tensor_token_f1_off_diagonal(self):
        tensor = build_similarity_tensor([["a b", "b c"]], MetricKind.TOKEN_F1)
        assert tensor.entries[0, 0, 1] == pytest.approx(0.5)

    def test_tensor_diagonal_all_bundled_metrics(self):
        texts = [["the big cat sat here", "a dog ran far away", "the big cat sat here"]]
        for kind in (MetricKind.EXACT_MATCH, MetricKind.TOKEN_F1, MetricKind.BLEU4,
                     MetricKind.ROUGE1, MetricKind.ROUGE2, MetricKind.ROUGE_L,
                     MetricKind.COSINE_BINARY):
            tensor = build_similarity_tensor(texts, kind)
            assert np.allclose(np.diagonal(tensor.entries, axis1=1, axis2=2), 1.0), kind

    def test_tensor_symmetric_for_asymmetric_metrics(self):
        texts = [["a b c d e", "a b x", "c d"]]
        for kind in (MetricKind.BLEU4, MetricKind.ROUGE1, MetricKind.ROUGE2):
            tensor = build_similarity_tensor(texts, kind)
            assert np.array_equal(tensor.entries, np.swapaxes(tensor.entries, 1, 2))


class TestMetricProperties:
    VOCAB = ["the", "cat", "dog", "sat", "ran", "on", "a", "mat", "rug", "fast"]

    def _random_text(self, rng, lo=0, hi=9):
        return " ".join(self.VOCAB[i] for i in rng.integers(0, len(self.VOCAB), rng.integers(lo, hi)))

    def test_outputs_in_unit_interval(self):
        rng = np.random.default_rng(5)
        kinds = [k for k in MetricKind if k is not MetricKind.PRECOMPUTED]
        for _ in range(300):
            a, b = self._random_text(rng), self._random_text(rng)
            for kind in kinds:
                value = score_pair(kind, a, b)
                assert 0.0 <= value <= 1.0, (kind, a, b)

    def test_symmetric_metrics(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            a, b = self._random_text(rng), self._random_text(rng)
            assert token_f1(a, b) == token_f1(b, a)
            assert rouge_l(a, b) == rouge_l(b, a)
            assert exact_match(a, b) == exact_match(b, a)

    def test_self_similarity_on_token_bearing_text(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            text = self._random_text(rng, lo=4, hi=9)
            assert token_f1(text, text) == 1.0
            assert bleu4(text, text) == 1.0
            assert rouge_n(text, text, 1) == 1.0
            assert rouge_n(text, text, 2) == 1.0
            assert rouge_l(text, text) == 1.0

    def test_random_tensor_satisfies_invariants(self):
        rng = np.random.default_rng(9)
        responses = [
            [self._random_text(rng, lo=4, hi=8) for _ in range(3)] for _ in range(4)
        ]
        for kind in (MetricKind.TOKEN_F1, MetricKind.BLEU4, MetricKind.ROUGE_L):
            tensor = build_similarity_tensor(responses, kind)
            assert np.isfinite(tensor.entries).all()
            assert tensor.entries.min() >= 0.0 and tensor.entries.max() <= 1.0
            assert np.array_equal(tensor.entries, np.swapaxes(tensor.entries, 1, 2))
            assert np.allclose(np.diagonal(tensor.entries, axis1=1, axis2=2), 1.0)
