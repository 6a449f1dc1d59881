"""Reference-based text similarity metrics and corpus builders.

Scoring is sentence-level: every (candidate, reference) pair is scored on its
own, never corpus-aggregated. Conventions that matter for reproducibility:

* tokenizer: lowercase, split on Unicode whitespace, strip leading/trailing
  punctuation (Unicode category P*) from each token, drop emptied tokens;
* exact_match trims surrounding whitespace, otherwise compares strictly;
* BLEU uses no smoothing: any zero n-gram precision (including a candidate
  shorter than the order) yields 0, so identical texts score 1 only with at
  least N tokens;
* ROUGE-L is reported as the F-measure 2PR/(P+R) of LCS precision/recall.

BERTScore-style embedding metrics and math-equivalence checking are not
computed here; bundles carrying those ship precomputed score files.
"""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from enum import Enum

import numpy as np

from .core import OracleScoreMatrix, SimilarityTensor


class MetricKind(str, Enum):
    EXACT_MATCH = "exact_match"
    TOKEN_F1 = "token_f1"
    BLEU4 = "bleu4"
    ROUGE1 = "rouge1"
    ROUGE2 = "rouge2"
    ROUGE_L = "rougeL"
    COSINE_BINARY = "cosine_binary"
    PRECOMPUTED = "precomputed"


COMPUTABLE_KINDS = tuple(k for k in MetricKind if k is not MetricKind.PRECOMPUTED)

# metrics whose pair function is symmetric; the rest get both directions
# averaged when a similarity tensor is built
_SYMMETRIC = {
    MetricKind.EXACT_MATCH,
    MetricKind.TOKEN_F1,
    MetricKind.ROUGE_L,
    MetricKind.COSINE_BINARY,
}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with edge punctuation stripped."""
    tokens = []
    for piece in text.lower().split():
        start, end = 0, len(piece)
        while start < end and _is_punct(piece[start]):
            start += 1
        while end > start and _is_punct(piece[end - 1]):
            end -= 1
        if end > start:
            tokens.append(piece[start:end])
    return tokens


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_overlap(a: Counter, b: Counter) -> int:
    return sum((a & b).values())


def exact_match(candidate: str, reference: str) -> float:
    return 1.0 if candidate.strip() == reference.strip() else 0.0


def token_f1(candidate: str, reference: str) -> float:
    return _f1_tokens(tokenize(candidate), tokenize(reference))


def _f1_tokens(cand: list[str], ref: list[str]) -> float:
    overlap = _clipped_overlap(Counter(cand), Counter(ref))
    p = overlap / len(cand) if cand else 0.0
    r = overlap / len(ref) if ref else 0.0
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def bleu_n(candidate: str, reference: str, max_order: int = 4,
           weights: list[float] | None = None) -> float:
    """Geometric mean of clipped n-gram precisions with a brevity penalty."""
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    if weights is None:
        weights = [1.0 / max_order] * max_order
    if len(weights) != max_order:
        raise ValueError(f"need {max_order} weights, got {len(weights)}")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    return _bleu_tokens(tokenize(candidate), tokenize(reference), max_order, weights)


def _bleu_tokens(cand: list[str], ref: list[str], max_order: int,
                 weights: list[float]) -> float:
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand_ngrams = _ngram_counts(cand, n)
        total = sum(cand_ngrams.values())
        matched = _clipped_overlap(cand_ngrams, _ngram_counts(ref, n))
        if matched == 0 or total == 0:
            return 0.0
        log_sum += weights[n - 1] * math.log(matched / total)
    bp = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return bp * math.exp(log_sum)


def bleu4(candidate: str, reference: str) -> float:
    return bleu_n(candidate, reference, max_order=4)


def rouge_n(candidate: str, reference: str, n: int) -> float:
    """Clipped n-gram overlap over the reference n-gram count."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _rouge_n_tokens(tokenize(candidate), tokenize(reference), n)


def _rouge_n_tokens(cand: list[str], ref: list[str], n: int) -> float:
    ref_ngrams = _ngram_counts(ref, n)
    denom = sum(ref_ngrams.values())
    if denom == 0:
        return 0.0
    return _clipped_overlap(_ngram_counts(cand, n), ref_ngrams) / denom


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b))."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: str, reference: str) -> float:
    return _rouge_l_tokens(tokenize(candidate), tokenize(reference))


def _rouge_l_tokens(cand: list[str], ref: list[str]) -> float:
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 2 * p * r / (p + r)


def cosine_binary(x, y) -> float:
    """Cosine similarity of bit vectors; zero-norm inputs score 0.

    The norm product is taken as sqrt((x.x)(y.y)), which is exact for bit
    vectors, so identical inputs score exactly 1.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    nx2 = float(xv @ xv)
    ny2 = float(yv @ yv)
    if nx2 == 0 or ny2 == 0:
        return 0.0
    return float(xv @ yv) / math.sqrt(nx2 * ny2)


def _cosine_tokens(cand: list[str], ref: list[str]) -> float:
    # token-presence cosine: |A & B| / sqrt(|A| |B|)
    a, b = set(cand), set(ref)
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


_TOKEN_SCORERS = {
    MetricKind.TOKEN_F1: _f1_tokens,
    MetricKind.BLEU4: lambda c, r: _bleu_tokens(c, r, 4, [0.25] * 4),
    MetricKind.ROUGE1: lambda c, r: _rouge_n_tokens(c, r, 1),
    MetricKind.ROUGE2: lambda c, r: _rouge_n_tokens(c, r, 2),
    MetricKind.ROUGE_L: _rouge_l_tokens,
    MetricKind.COSINE_BINARY: _cosine_tokens,
}


def score_pair(kind: MetricKind, candidate: str, reference: str) -> float:
    """Score one candidate against one reference under the given metric."""
    kind = MetricKind(kind)
    if kind is MetricKind.PRECOMPUTED:
        raise ValueError("precomputed metric cannot score raw text")
    if kind is MetricKind.EXACT_MATCH:
        return exact_match(candidate, reference)
    return _TOKEN_SCORERS[kind](tokenize(candidate), tokenize(reference))


def build_oracle_matrix(responses: list[list[str]], references: list[str],
                        kind: MetricKind) -> OracleScoreMatrix:
    """Score every model response against its query's reference."""
    kind = MetricKind(kind)
    if kind is MetricKind.PRECOMPUTED:
        raise ValueError("precomputed metric cannot score raw text")
    n = len(responses)
    if len(references) != n:
        raise ValueError(f"{n} response rows but {len(references)} references")
    m = len(responses[0]) if n else 0
    entries = np.zeros((n, m))
    for i, (row, ref) in enumerate(zip(responses, references)):
        if ref is None:
            raise ValueError(f"missing reference for query {i}")
        if len(row) != m:
            raise ValueError(f"query {i} has {len(row)} responses, expected {m}")
        for j, resp in enumerate(row):
            entries[i, j] = score_pair(kind, resp, ref)
    return OracleScoreMatrix(entries)


def build_similarity_tensor(responses: list[list[str]], kind: MetricKind) -> SimilarityTensor:
    """Pairwise response similarities per query, symmetrized.

    Symmetric metrics are evaluated once per unordered pair; asymmetric ones
    (BLEU, ROUGE-N) are evaluated in both directions and averaged.
    """
    kind = MetricKind(kind)
    if kind is MetricKind.PRECOMPUTED:
        raise ValueError("precomputed metric cannot score raw text")
    n = len(responses)
    m = len(responses[0]) if n else 0
    symmetric = kind in _SYMMETRIC
    if kind is MetricKind.EXACT_MATCH:
        prep, score = (lambda text: text), exact_match
    else:
        prep, score = tokenize, _TOKEN_SCORERS[kind]
    entries = np.zeros((n, m, m))
    for i, row in enumerate(responses):
        if len(row) != m:
            raise ValueError(f"query {i} has {len(row)} responses, expected {m}")
        scored = [prep(text) for text in row]
        for j in range(m):
            for k in range(j, m):
                value = score(scored[j], scored[k])
                if not symmetric and j != k:
                    value = 0.5 * (value + score(scored[k], scored[j]))
                entries[i, j, k] = entries[i, k, j] = value
    return SimilarityTensor(entries)
