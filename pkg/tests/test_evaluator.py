from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st

from conftest import constant_skill_dataset, separable_pairs
from skillrank.annotation import PairGraph, PairLabel, PairSets
from skillrank.datastore import FeatureSequence, Modality, TaskDataset
from skillrank.errors import EvaluationError, OrchestrationError, SkillRankError
from skillrank.evaluator import (
    ALPHA_GRID,
    EvalConfig,
    SkillRanking,
    alpha_sweep,
    cross_validate,
    evaluate_video,
    fuse,
    pairwise_precision,
    rank_videos,
    separation_accuracy,
    snippet_curve,
    spearman_rho,
    stream_scores,
)
from skillrank.sampler import SnippetMode
from skillrank.sampler import test_snippets as snippet_indices
from skillrank.scorer import Architecture, init_params, score_snippet
from skillrank.trainer import LossVariant, TrainConfig


def linear_params(w, b=0.0):
    params = init_params(Architecture(input_dim=len(w)), seed=0)
    params.weights[0][:] = np.asarray(w, dtype=np.float64)
    params.biases[0][:] = b
    return params


# --- fusion ------------------------------------------------------------------

def test_fuse_by_hand():
    assert fuse(1.0, 2.0, 0.4) == pytest.approx(1.6)


def test_fuse_extremes():
    assert fuse(3.0, -9.0, 1.0) == 3.0
    assert fuse(3.0, -9.0, 0.0) == -9.0


def test_fuse_rejects_bad_alpha():
    with pytest.raises(SkillRankError):
        fuse(0.0, 0.0, 1.5)


# --- evaluate_video -------------------------------------------------------------

def _video_sequences(rows_s, rows_t):
    return {
        Modality.SPATIAL: FeatureSequence("v", Modality.SPATIAL, rows_s),
        Modality.TEMPORAL: FeatureSequence("v", Modality.TEMPORAL, rows_t),
    }


def test_constant_sequences_fuse_exactly():
    seqs = _video_sequences(
        np.full((6, 1), 2.0, np.float32), np.full((6, 1), 5.0, np.float32)
    )
    params = linear_params([1.0])
    cfg = EvalConfig(alpha=0.4, sigma=6)
    assert evaluate_video(params, params, seqs, cfg) == pytest.approx(0.4 * 2 + 0.6 * 5)


def test_evaluate_video_matches_brute_force():
    rng = np.random.default_rng(11)
    rows_s = rng.normal(size=(8, 3)).astype(np.float32)
    rows_t = rng.normal(size=(8, 3)).astype(np.float32)
    seqs = _video_sequences(rows_s, rows_t)
    params_s = linear_params([0.5, -1.0, 2.0], b=0.3)
    params_t = linear_params([1.0, 1.0, -0.5], b=-0.1)
    cfg = EvalConfig(alpha=0.4, sigma=4)

    # Independent recomputation: sample indices, score each snippet, fuse, mean.
    idx = snippet_indices(8, 4, SnippetMode.UNIFORM)
    fused = [
        0.4 * score_snippet(params_s, rows_s[k]) + 0.6 * score_snippet(params_t, rows_t[k])
        for k in idx
    ]
    expected = float(np.mean(fused))
    assert evaluate_video(params_s, params_t, seqs, cfg) == pytest.approx(expected, abs=1e-12)


def test_missing_modality_is_error():
    seqs = {Modality.SPATIAL: FeatureSequence("v", Modality.SPATIAL, np.ones((3, 1), np.float32))}
    params = linear_params([1.0])
    with pytest.raises(EvaluationError):
        evaluate_video(params, params, seqs, EvalConfig())


# --- pairwise precision ----------------------------------------------------------

TRUTH = [PairLabel("A", "B", 1), PairLabel("B", "C", 1), PairLabel("A", "C", 1)]


def test_perfect_ranking():
    ranking = SkillRanking("t", {"A": 3.0, "B": 2.0, "C": 1.0})
    assert pairwise_precision(ranking, TRUTH) == 1.0


def test_reversed_ranking():
    ranking = SkillRanking("t", {"A": 1.0, "B": 2.0, "C": 3.0})
    assert pairwise_precision(ranking, TRUTH) == 0.0


def test_two_of_three_pairs():
    ranking = SkillRanking("t", {"A": 3.0, "B": 1.0, "C": 2.0})
    assert pairwise_precision(ranking, TRUTH) == pytest.approx(2 / 3)


def test_ties_count_as_incorrect():
    ranking = SkillRanking("t", {"A": 1.0, "B": 1.0, "C": 0.0})
    assert pairwise_precision(ranking, TRUTH[:1]) == 0.0


def test_missing_video_is_error():
    ranking = SkillRanking("t", {"A": 1.0})
    with pytest.raises(EvaluationError):
        pairwise_precision(ranking, TRUTH)


@given(seed=st.integers(0, 200))
def test_precision_plus_reversed_bounded_by_one(seed):
    rng = np.random.default_rng(seed)
    videos = [f"v{k}" for k in range(6)]
    scores = {v: float(rng.integers(0, 8)) for v in videos}
    truth = [
        PairLabel(a, b, 1)
        for idx, a in enumerate(videos)
        for b in videos[idx + 1 :]
    ]
    fwd = SkillRanking("t", scores)
    rev = SkillRanking("t", {v: -s for v, s in scores.items()})
    total = pairwise_precision(fwd, truth) + pairwise_precision(rev, truth)
    assert total <= 1.0 + 1e-12
    if len(set(scores.values())) == len(videos):
        assert total == pytest.approx(1.0)


def test_ranking_order_breaks_ties_lexicographically():
    ranking = SkillRanking("t", {"B": 1.0, "A": 1.0, "C": 2.0})
    assert ranking.order == ["C", "A", "B"]


# --- separation accuracy -----------------------------------------------------------

CHAIN = PairGraph(edges=[("A", "B"), ("B", "C")])
CHAIN_TRUTH = [PairLabel("A", "B", 1), PairLabel("B", "C", 1), PairLabel("A", "C", 1)]


def test_separation_buckets_perfect():
    ranking = SkillRanking("t", {"A": 3.0, "B": 2.0, "C": 1.0})
    buckets = separation_accuracy(CHAIN, ranking, CHAIN_TRUTH)
    assert buckets[1].accuracy == 1.0 and buckets[2].accuracy == 1.0


def test_separation_buckets_reversed():
    ranking = SkillRanking("t", {"A": 1.0, "B": 2.0, "C": 3.0})
    buckets = separation_accuracy(CHAIN, ranking, CHAIN_TRUTH)
    assert buckets[1].accuracy == 0.0 and buckets[2].accuracy == 0.0


def test_empty_bucket_absent():
    ranking = SkillRanking("t", {"A": 3.0, "B": 2.0, "C": 1.0})
    buckets = separation_accuracy(CHAIN, ranking, CHAIN_TRUTH[:1])
    assert set(buckets) == {1}


@given(seed=st.integers(0, 100))
def test_bucket_weighted_mean_equals_overall(seed):
    rng = np.random.default_rng(seed)
    videos = [f"v{k}" for k in range(7)]
    # A random connected DAG: edge from lower to higher index videos.
    edges = {
        (videos[a], videos[b])
        for a in range(7)
        for b in range(a + 1, 7)
        if rng.random() < 0.5
    } | {(videos[k], videos[k + 1]) for k in range(6)}
    graph = PairGraph(nodes=videos, edges=edges)
    truth = [PairLabel(a, b, 1) for a, b in edges]
    scores = {v: float(rng.normal()) for v in videos}
    ranking = SkillRanking("t", scores)
    buckets = separation_accuracy(graph, ranking, truth)
    weighted = Fraction(
        sum(b.correct for b in buckets.values()), sum(b.total for b in buckets.values())
    )
    overall = Fraction(
        sum(1 for p in truth if scores[p.i] > scores[p.j]), len(truth)
    )
    assert weighted == overall


# --- alpha sweep ----------------------------------------------------------------

def test_alpha_grid_has_eleven_points():
    assert len(ALPHA_GRID) == 11
    assert ALPHA_GRID[0] == 0.0 and ALPHA_GRID[-1] == 1.0


def _two_stream_dataset():
    skills = {f"v{k}": float(k) for k in range(5)}
    return constant_skill_dataset(skills, dim=1, length=10), separable_pairs(skills)


def test_alpha_sweep_zero_weight_temporal():
    dataset, pairs = _two_stream_dataset()
    params_s = linear_params([1.0])
    params_t = linear_params([0.0])
    points = alpha_sweep(params_s, params_t, dataset, dataset.videos, pairs.psi, EvalConfig(sigma=5))
    assert len(points) == 11
    # alpha=0 leaves only the zero-weight temporal stream: all ties -> 0.0.
    assert points[0] == (0.0, 0.0)
    # Any positive alpha ranks by the separable spatial stream.
    assert all(p == 1.0 for alpha, p in points[1:])


def test_alpha_sweep_flat_for_identical_streams():
    dataset, pairs = _two_stream_dataset()
    params = linear_params([1.0])
    points = alpha_sweep(params, params, dataset, dataset.videos, pairs.psi, EvalConfig(sigma=5))
    precisions = {p for _, p in points}
    assert precisions == {1.0}


# --- snippet curves ----------------------------------------------------------------

def test_snippet_curves_agree_at_full_length():
    dataset, pairs = _two_stream_dataset()
    params = linear_params([1.0])
    curves = snippet_curve(
        params, params, dataset, dataset.videos, pairs.psi, EvalConfig(sigma=10), sigma_max=10
    )
    finals = {mode: points[-1][1] for mode, points in curves.items()}
    assert len(set(finals.values())) == 1


def test_single_snippet_suffices_for_constant_features():
    dataset, pairs = _two_stream_dataset()
    params = linear_params([1.0])
    curves = snippet_curve(
        params, params, dataset, dataset.videos, pairs.psi, EvalConfig(sigma=10), sigma_max=10
    )
    for points in curves.values():
        assert points[0][1] == points[-1][1] == 1.0


def test_early_signal_favors_start_mode():
    # Skill signal lives only in the first half of each video.
    rng = np.random.default_rng(5)
    skills = {f"v{k}": float(k) for k in range(6)}
    sequences = {}
    length = 20
    for modality in (Modality.SPATIAL, Modality.TEMPORAL):
        for video, skill in skills.items():
            rows = np.zeros((length, 1))
            rows[: length // 2, 0] = skill
            sequences[(video, modality)] = FeatureSequence(
                video, modality, rows.astype(np.float32)
            )
    dataset = TaskDataset(
        task_id="early",
        modalities=(Modality.SPATIAL, Modality.TEMPORAL),
        videos=tuple(sorted(skills)),
        sequences=sequences,
    )
    truth = separable_pairs(skills).psi
    params = linear_params([1.0])
    curves = snippet_curve(
        params, params, dataset, dataset.videos, truth, EvalConfig(), sigma_max=5
    )
    start = dict(curves["start"])
    end = dict(curves["end"])
    assert all(start[s] > end[s] for s in range(1, 6))


# --- spearman ------------------------------------------------------------------------

def test_spearman_monotone():
    x = [1.0, 2.0, 3.0, 4.0]
    assert spearman_rho(x, [10.0, 20.0, 30.0, 40.0]) == pytest.approx(1.0)
    assert spearman_rho(x, [9.0, 6.0, 4.0, 1.0]) == pytest.approx(-1.0)


def test_spearman_matches_scipy_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(3, 30))
        x = rng.integers(0, 6, size=n).astype(float)
        y = rng.normal(size=n)
        if len(set(x)) < 2:
            continue
        expected = scipy.stats.spearmanr(x, y).statistic
        assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)


@given(seed=st.integers(0, 100), scale=st.floats(0.1, 5.0))
def test_spearman_invariant_under_monotone_transform(seed, scale):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=12)
    y = rng.normal(size=12)
    rho = spearman_rho(x, y)
    assert spearman_rho(np.exp(scale * x), y) == pytest.approx(rho, abs=1e-12)


def test_spearman_length_mismatch():
    with pytest.raises(EvaluationError):
        spearman_rho([1.0, 2.0], [1.0])


# --- fusion scale invariance ------------------------------------------------------------

@given(c=st.floats(0.1, 9.0))
def test_scaling_both_streams_preserves_ranking(c):
    dataset, pairs = _two_stream_dataset()
    params_a = linear_params([1.0], b=0.2)
    params_b = linear_params([0.5], b=-0.1)
    scaled_a = linear_params([c * 1.0], b=c * 0.2)
    scaled_b = linear_params([c * 0.5], b=c * -0.1)
    cfg = EvalConfig(alpha=0.4, sigma=5)
    base = rank_videos(params_a, params_b, dataset, dataset.videos, cfg)
    scaled = rank_videos(scaled_a, scaled_b, dataset, dataset.videos, cfg)
    assert base.order == scaled.order
    assert pairwise_precision(base, pairs.psi) == pairwise_precision(scaled, pairs.psi)


# --- cross validation ---------------------------------------------------------------------

def quick_cfg(**overrides):
    base = dict(
        variant=LossVariant.RANK1,
        splits=1,
        batch_size=16,
        lr_schedule=((0, 1e-2),),
        max_iterations=150,
        seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


def test_cross_validate_separable_task():
    skills = {f"v{k:02d}": float(k) for k in range(12)}
    dataset = constant_skill_dataset(skills, dim=2, length=12, noise_sd=0.05)
    pairs = separable_pairs(skills)
    result = cross_validate(
        dataset,
        pairs,
        quick_cfg(),
        EvalConfig(sigma=12),
        k=4,
        seed=1,
        arch=Architecture(2),
    )
    assert len(result.folds) == 4
    assert result.mean_precision >= 0.95


def test_cross_validate_deterministic():
    skills = {f"v{k:02d}": float(k) for k in range(8)}
    dataset = constant_skill_dataset(skills, dim=1, length=9, noise_sd=0.02)
    pairs = separable_pairs(skills)
    args = dict(
        train_cfgs=quick_cfg(max_iterations=40),
        eval_cfg=EvalConfig(sigma=9),
        k=4,
        seed=3,
        arch=Architecture(1),
    )
    a = cross_validate(dataset, pairs, **args)
    b = cross_validate(dataset, pairs, **args)
    assert [f.precision for f in a.folds] == [f.precision for f in b.folds]
    assert [f.test_videos for f in a.folds] == [f.test_videos for f in b.folds]


def test_cross_validate_empty_train_fold_is_orchestration_error():
    skills = {"A": 0.0, "B": 1.0, "C": 2.0, "D": 3.0}
    dataset = constant_skill_dataset(skills, length=9)
    pairs = PairSets(
        psi=[PairLabel("B", "A", 1), PairLabel("C", "A", 1), PairLabel("D", "A", 1)]
    )
    with pytest.raises(OrchestrationError):
        cross_validate(
            dataset, pairs, quick_cfg(max_iterations=5), EvalConfig(sigma=9), k=2, seed=0
        )


def test_stream_scores_single_modality():
    dataset, _ = _two_stream_dataset()
    params = linear_params([1.0])
    scores = stream_scores(params, dataset, Modality.SPATIAL, dataset.videos, EvalConfig(sigma=5))
    assert scores["v4"] > scores["v0"]
