"""Test-time scoring, two-stream fusion, rankings, and every reported metric:
pairwise precision, separation-binned accuracy, fusion-weight sweeps, snippet
count curves, rank correlation, and cross-validation orchestration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import scorer
from .annotation import (
    PairGraph,
    PairLabel,
    PairSets,
    make_folds,
    separation,
    split_pairs_for_fold,
)
from .datastore import Modality, TaskDataset
from .errors import CyclicGraphError, EvaluationError, OrchestrationError, SkillRankError
from .sampler import SnippetMode, test_snippets
from .scorer import ScorerParams
from .seeding import derive_seed
from .trainer import TrainConfig, TrainResult, train_stream


@dataclass(frozen=True)
class EvalConfig:
    alpha: float = 0.4
    sigma: int = 25
    mode: SnippetMode = SnippetMode.UNIFORM
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise SkillRankError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.sigma < 1:
            raise SkillRankError(f"sigma must be >= 1, got {self.sigma}")
        object.__setattr__(self, "mode", SnippetMode(self.mode))


@dataclass
class SkillRanking:
    """Scores plus the descending order, ties broken by video id."""

    task_id: str
    scores: dict[str, float]
    order: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.order = sorted(self.scores, key=lambda v: (-self.scores[v], v))


def fuse(score_s: float, score_t: float, alpha: float) -> float:
    """Weighted average of the spatial and temporal stream scores."""
    if not 0.0 <= alpha <= 1.0:
        raise SkillRankError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * score_s + (1.0 - alpha) * score_t


def _snippet_mean(
    params: ScorerParams, rows: np.ndarray, cfg: EvalConfig, video_id: str
) -> float:
    indices = test_snippets(
        len(rows), cfg.sigma, cfg.mode, rng_seed=derive_seed(cfg.seed, "test", video_id)
    )
    return float(scorer.score_rows(params, rows[indices]).mean())


def evaluate_video(
    params_s: ScorerParams,
    params_t: ScorerParams,
    sequences: Mapping[Modality, "np.ndarray | object"],
    cfg: EvalConfig,
) -> float:
    """Fused mean score over the sampled test snippets of one video.

    Each stream samples its own sequence; the per-stream snippet means are
    fused, which equals the mean of per-snippet fused scores whenever both
    streams sample the same number of snippets.
    """
    seqs = {Modality(m): s for m, s in sequences.items()}
    for modality in (Modality.SPATIAL, Modality.TEMPORAL):
        if modality not in seqs:
            raise EvaluationError(f"missing {modality.value} sequence")
    seq_s = seqs[Modality.SPATIAL]
    seq_t = seqs[Modality.TEMPORAL]
    mean_s = _snippet_mean(params_s, np.asarray(seq_s.rows, dtype=np.float64), cfg, seq_s.video_id)
    mean_t = _snippet_mean(params_t, np.asarray(seq_t.rows, dtype=np.float64), cfg, seq_t.video_id)
    return fuse(mean_s, mean_t, cfg.alpha)


def stream_scores(
    params: ScorerParams,
    dataset: TaskDataset,
    modality: Modality,
    video_ids: Iterable[str],
    cfg: EvalConfig,
) -> dict[str, float]:
    """Per-video snippet-mean scores for one stream."""
    modality = Modality(modality)
    out = {}
    for video in video_ids:
        seq = dataset.sequence(video, modality)
        out[video] = _snippet_mean(
            params, seq.rows.astype(np.float64), cfg, video
        )
    return out


def rank_videos(
    params_s: ScorerParams,
    params_t: ScorerParams,
    dataset: TaskDataset,
    video_ids: Iterable[str],
    cfg: EvalConfig,
) -> SkillRanking:
    video_ids = list(video_ids)
    means_s = stream_scores(params_s, dataset, Modality.SPATIAL, video_ids, cfg)
    means_t = stream_scores(params_t, dataset, Modality.TEMPORAL, video_ids, cfg)
    scores = {v: fuse(means_s[v], means_t[v], cfg.alpha) for v in video_ids}
    return SkillRanking(task_id=dataset.task_id, scores=scores)


def pairwise_precision(ranking: SkillRanking, truth: Sequence[PairLabel]) -> float:
    """Fraction of ground-truth ordered pairs scored strictly correctly.

    A pair counts as correct only when the higher-skill video's score is
    strictly greater; ties are losses.
    """
    if not truth:
        raise EvaluationError("pairwise precision over an empty pair set is undefined")
    correct = 0
    for pair in truth:
        if pair.label != 1:
            raise EvaluationError(f"precision truth must be ordered pairs, got {pair}")
        for video in (pair.i, pair.j):
            if video not in ranking.scores:
                raise EvaluationError(f"video {video!r} missing from the ranking")
        if ranking.scores[pair.i] > ranking.scores[pair.j]:
            correct += 1
    return correct / len(truth)


@dataclass(frozen=True)
class SeparationBucket:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


def separation_accuracy(
    graph: PairGraph, ranking: SkillRanking, truth: Sequence[PairLabel]
) -> dict[int, SeparationBucket]:
    """Pairwise precision bucketed by longest-walk separation.

    Pairs whose separation is undefined (either endpoint outside the graph or
    in a different weak component) are not bucketed.
    """
    if not graph.is_acyclic():
        raise CyclicGraphError("separation needs an acyclic graph", cycles=[])
    counts: dict[int, list[int]] = {}
    for pair in truth:
        sep = separation(graph, pair.i, pair.j)
        if sep is None:
            continue
        bucket = counts.setdefault(sep, [0, 0])
        bucket[1] += 1
        if ranking.scores[pair.i] > ranking.scores[pair.j]:
            bucket[0] += 1
    return {
        sep: SeparationBucket(correct=c, total=t) for sep, (c, t) in sorted(counts.items())
    }


ALPHA_GRID = tuple(round(0.1 * t, 1) for t in range(11))


def alpha_sweep(
    params_s: ScorerParams,
    params_t: ScorerParams,
    dataset: TaskDataset,
    video_ids: Iterable[str],
    truth: Sequence[PairLabel],
    cfg: EvalConfig,
) -> list[tuple[float, float]]:
    """Pairwise precision of the fused ranking at alpha = 0, 0.1, ..., 1."""
    video_ids = list(video_ids)
    means_s = stream_scores(params_s, dataset, Modality.SPATIAL, video_ids, cfg)
    means_t = stream_scores(params_t, dataset, Modality.TEMPORAL, video_ids, cfg)
    points = []
    for alpha in ALPHA_GRID:
        scores = {v: fuse(means_s[v], means_t[v], alpha) for v in video_ids}
        ranking = SkillRanking(task_id=dataset.task_id, scores=scores)
        points.append((alpha, pairwise_precision(ranking, truth)))
    return points


def snippet_curve(
    params_s: ScorerParams,
    params_t: ScorerParams,
    dataset: TaskDataset,
    video_ids: Iterable[str],
    truth: Sequence[PairLabel],
    cfg: EvalConfig,
    modes: Sequence[SnippetMode] = (SnippetMode.START, SnippetMode.END, SnippetMode.RANDOM),
    sigma_max: int = 25,
    random_draws: int = 10,
) -> dict[str, list[tuple[int, float]]]:
    """Precision as a function of the test snippet count, per sampling mode.

    Row scores are computed once per video and stream; every (sigma, mode)
    point is then a mean over the selected rows. The random mode averages
    precision over `random_draws` seeded draws.
    """
    if sigma_max < 1:
        raise SkillRankError(f"sigma_max must be >= 1, got {sigma_max}")
    video_ids = list(video_ids)
    row_scores: dict[str, dict[str, np.ndarray]] = {}
    for video in video_ids:
        rows_s = dataset.sequence(video, Modality.SPATIAL).rows.astype(np.float64)
        rows_t = dataset.sequence(video, Modality.TEMPORAL).rows.astype(np.float64)
        row_scores[video] = {
            "s": scorer.score_rows(params_s, rows_s),
            "t": scorer.score_rows(params_t, rows_t),
        }

    def precision_for(sigma: int, mode: SnippetMode, seed: int) -> float:
        scores = {}
        for video in video_ids:
            per = row_scores[video]
            idx_s = test_snippets(len(per["s"]), sigma, mode, rng_seed=derive_seed(seed, video, "s"))
            idx_t = test_snippets(len(per["t"]), sigma, mode, rng_seed=derive_seed(seed, video, "t"))
            scores[video] = fuse(
                float(per["s"][idx_s].mean()), float(per["t"][idx_t].mean()), cfg.alpha
            )
        ranking = SkillRanking(task_id=dataset.task_id, scores=scores)
        return pairwise_precision(ranking, truth)

    curves: dict[str, list[tuple[int, float]]] = {}
    for mode in modes:
        mode = SnippetMode(mode)
        points = []
        for sigma in range(1, sigma_max + 1):
            if mode is SnippetMode.RANDOM:
                draws = [
                    precision_for(sigma, mode, derive_seed(cfg.seed, "curve", draw))
                    for draw in range(random_draws)
                ]
                points.append((sigma, float(np.mean(draws))))
            else:
                points.append((sigma, precision_for(sigma, mode, cfg.seed)))
        curves[mode.value] = points
    return curves


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    idx = 0
    while idx < len(v):
        run = idx
        while run + 1 < len(v) and v[order[run + 1]] == v[order[idx]]:
            run += 1
        # Average 1-based rank across the tie run.
        ranks[order[idx : run + 1]] = (idx + run) / 2.0 + 1.0
        idx = run + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average-rank tie handling."""
    if len(x) != len(y):
        raise EvaluationError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise EvaluationError("need at least 2 observations")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = np.sqrt((sx * sx).sum() * (sy * sy).sum())
    if denom == 0.0:
        raise EvaluationError("rank correlation undefined for constant input")
    return float((sx * sy).sum() / denom)


@dataclass
class FoldResult:
    fold_index: int
    test_videos: list[str]
    precision: float
    per_separation: dict[int, SeparationBucket] | None = None
    alpha_curve: list[tuple[float, float]] | None = None
    snippet_curves: dict[str, list[tuple[int, float]]] | None = None
    train_results: dict[str, TrainResult] | None = None


@dataclass
class CrossValidationResult:
    folds: list[FoldResult]

    @property
    def mean_precision(self) -> float:
        return float(np.mean([f.precision for f in self.folds]))


def cross_validate(
    dataset: TaskDataset,
    pairs: PairSets,
    train_cfgs: Mapping[Modality, TrainConfig] | TrainConfig,
    eval_cfg: EvalConfig,
    k: int = 4,
    seed: int = 0,
    arch: scorer.Architecture | None = None,
    with_curves: bool = False,
    snippet_sigma_max: int = 25,
    keep_train_results: bool = False,
) -> CrossValidationResult:
    """Pair-level k-fold cross-validation.

    Folds partition the videos; training uses pairs with both endpoints
    outside the test fold and testing uses all remaining ordered pairs,
    including those with one training-video endpoint.
    """
    if isinstance(train_cfgs, TrainConfig):
        train_cfgs = {m: train_cfgs for m in (Modality.SPATIAL, Modality.TEMPORAL)}
    folds = make_folds(dataset.videos, k, seed)
    graph = None
    if with_curves:
        from .annotation import build_pair_graph

        graph = build_pair_graph(pairs.psi)

    results = []
    for fold_index, test_fold in enumerate(folds):
        train_pairs, test_pairs = split_pairs_for_fold(pairs, test_fold)
        if not train_pairs.psi:
            raise OrchestrationError(
                f"fold {fold_index}: no training pairs remain outside the test fold"
            )
        if not test_pairs.psi:
            raise OrchestrationError(f"fold {fold_index}: no ordered test pairs")
        trained: dict[Modality, TrainResult] = {}
        for modality in (Modality.SPATIAL, Modality.TEMPORAL):
            trained[modality] = train_stream(
                dataset,
                modality,
                train_pairs.psi,
                train_pairs.phi,
                train_cfgs[modality],
                arch=arch,
            )
        ranking = rank_videos(
            trained[Modality.SPATIAL].params,
            trained[Modality.TEMPORAL].params,
            dataset,
            dataset.videos,
            eval_cfg,
        )
        fold = FoldResult(
            fold_index=fold_index,
            test_videos=list(test_fold),
            precision=pairwise_precision(ranking, test_pairs.psi),
        )
        if with_curves:
            fold.per_separation = separation_accuracy(graph, ranking, test_pairs.psi)
            fold.alpha_curve = alpha_sweep(
                trained[Modality.SPATIAL].params,
                trained[Modality.TEMPORAL].params,
                dataset,
                dataset.videos,
                test_pairs.psi,
                eval_cfg,
            )
            fold.snippet_curves = snippet_curve(
                trained[Modality.SPATIAL].params,
                trained[Modality.TEMPORAL].params,
                dataset,
                dataset.videos,
                test_pairs.psi,
                eval_cfg,
                sigma_max=snippet_sigma_max,
            )
        if keep_train_results:
            fold.train_results = {m.value: r for m, r in trained.items()}
        results.append(fold)
    return CrossValidationResult(folds=results)
