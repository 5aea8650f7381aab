"""skillrank: pairwise ranking of task videos by displayed skill.

Learns a shared-weight scoring function from crowdsourced pairwise judgments
over precomputed per-snippet feature sequences, with margin ranking and
similarity losses, two-stream fusion, and the full annotation-consistency and
evaluation pipeline.
"""

from .annotation import (
    Choice,
    Judgment,
    PairGraph,
    PairLabel,
    PairSets,
    build_pair_graph,
    consensus,
    find_cycles,
    make_folds,
    pairs_from_scores,
    qc_filter,
    separation,
    similar_pairs,
    split_pairs_for_fold,
)
from .datastore import (
    FeatureSequence,
    Modality,
    TaskDataset,
    load_feature_sequence,
    validate_dataset,
    write_feature_sequence,
)
from .evaluator import (
    CrossValidationResult,
    EvalConfig,
    SkillRanking,
    cross_validate,
    evaluate_video,
    fuse,
    pairwise_precision,
    separation_accuracy,
    spearman_rho,
)
from .losses import LossConfig, loss_rank2, loss_rank3, rank_term, sim_term
from .sampler import SnippetMode, SplitPlan, sample_training_snippets, test_snippets, uniform_splits
from .scorer import (
    Architecture,
    Gradients,
    ScorerParams,
    backward,
    default_architecture,
    gradient_check,
    init_params,
    load_params,
    save_params,
    score_clip,
    score_snippet,
)
from .trainer import LossVariant, TrainConfig, TrainResult, lr_at, train_stream

__version__ = "0.1.0"
