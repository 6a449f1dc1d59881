"""Active model selection under a limited annotation budget.

Given a pool of queries and per-query pairwise similarities between candidate
models' responses, the selector greedily annotates the queries most likely to
distinguish the plausible best models, keeping a Bayesian posterior over the
candidates. Ships with reference-based text metrics, baseline strategies, a
realization-based evaluation harness, a temperature tuner, an exact
information-gain validation lab, and an interactive annotation service.
"""

from .baselines import (
    BASELINE_KINDS,
    STRATEGY_KINDS,
    SupportScores,
    amc_next,
    margin_order,
    min_agreement_order,
    random_order,
    run_baseline,
    support_scores,
    vma_next,
)
from .core import (
    AnnotatedSet,
    OracleScoreMatrix,
    Posterior,
    SessionState,
    SimilarityTensor,
    Trajectory,
    TrajectoryRecord,
    batch_posterior,
    posterior_update,
    uniform_prior,
)
from .dataio import BundleLoadError, DatasetBundle, load_bundle, write_bundle
from .harness import (
    CurvePoint,
    EfficiencyReport,
    RealizationPlan,
    TrialResult,
    efficiency,
    gap_percentile,
    identification_curve,
    labels_to_full,
    near_best_curve,
    run_trials,
    sample_realization,
    summarize,
    true_best,
)
from .metrics import (
    MetricKind,
    bleu4,
    bleu_n,
    build_oracle_matrix,
    build_similarity_tensor,
    cosine_binary,
    exact_match,
    rouge_l,
    rouge_n,
    token_f1,
    tokenize,
)
from .selector import (
    empirical_best,
    matrix_oracle,
    run_select_llm,
    select_next,
    selection_score,
)
from .synthetic import (
    AgreementReport,
    BinaryResponseSpace,
    ValidationConfig,
    derivation_checks,
    exact_mi,
    pairwise_accuracy,
    run_validation,
    spearman,
)
from .tuner import TauGrid, TuneResult, proxy_oracle, sensitivity_sweep, tune_tau

__version__ = "0.1.0"
