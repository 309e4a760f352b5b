"""Distance-based diversity objectives (average, min, Gaussian-kernel) with
greedy maximization, theorem verification, and reranking experiments."""

__version__ = "0.1.0"

from .catalogs import FeatureCatalog, GenreCatalog, read_features, read_genres
from .dataio import EmbeddingSpec, FeedbackMatrix, SplitSpec, embed_items, split_feedback
from .distance import DistanceOracle, diameter
from .objectives import (
    DISP_SPEC,
    ILD_SPEC,
    ObjectiveSpec,
    ObjectiveValue,
    adjusted_sigma,
    dispersion,
    evaluate,
    gild,
    ild,
    kernel_distance,
)
from .optimize import (
    BruteForceResult,
    RerankConfig,
    Selection,
    SelectionStep,
    brute_force,
    greedy,
    greedy_gild_adaptive,
    greedy_rerank,
)
from .relevance import EaseModel, fit_ease, load_ease, save_ease, score_users, tune_l2
from .verify import (
    LimitCheckReport,
    TheoremReport,
    check_claim_32,
    check_claim_33,
    check_gild_limits,
    check_theorem_31,
)
from .experiments import (
    EvalReport,
    HistogramReport,
    RelativeScoreReport,
    SigmaSweepReport,
    eval_rerank,
    ndcg,
    pairwise_histogram,
    relative_scores,
    sigma_sweep,
)

__all__ = [
    "__version__",
    "FeatureCatalog", "GenreCatalog", "read_features", "read_genres",
    "EmbeddingSpec", "FeedbackMatrix", "SplitSpec", "embed_items", "split_feedback",
    "DistanceOracle", "diameter",
    "ObjectiveSpec", "ObjectiveValue", "ILD_SPEC", "DISP_SPEC",
    "ild", "dispersion", "gild", "kernel_distance", "adjusted_sigma", "evaluate",
    "Selection", "SelectionStep", "RerankConfig", "BruteForceResult",
    "greedy", "greedy_gild_adaptive", "greedy_rerank", "brute_force",
    "EaseModel", "fit_ease", "score_users", "tune_l2", "save_ease", "load_ease",
    "TheoremReport", "LimitCheckReport",
    "check_theorem_31", "check_claim_32", "check_claim_33", "check_gild_limits",
    "RelativeScoreReport", "SigmaSweepReport", "HistogramReport", "EvalReport",
    "relative_scores", "sigma_sweep", "pairwise_histogram", "ndcg", "eval_rerank",
]
