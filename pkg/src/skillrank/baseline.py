"""Linear pairwise max-margin ranker over whole-video mean-pooled features.

Objective: 0.5*||w||^2 + C * sum over ordered pairs of max(0, 1 - w.(x_i - x_j)),
minimized by deterministic full-batch subgradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .annotation import PairLabel
from .datastore import FeatureSequence, Modality
from .errors import DataError, DimensionError, SkillRankError
from .evaluator import SkillRanking, fuse


@dataclass
class LinearRanker:
    w: np.ndarray
    C: float

    def score(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.w.shape:
            raise DimensionError(f"feature shape {x.shape} != weight shape {self.w.shape}")
        return float(self.w @ x)


def video_feature(sequence: FeatureSequence) -> np.ndarray:
    """Mean over all rows: one aggregate vector per video per modality."""
    if len(sequence) == 0:
        raise DataError(f"empty sequence for {sequence.video_id}")
    return sequence.rows.astype(np.float64).mean(axis=0)


def hinge_objective(
    w: np.ndarray, diffs: np.ndarray, C: float
) -> tuple[float, float]:
    """Returns (objective value, hinge-sum part alone)."""
    margins = diffs @ w
    hinges = np.maximum(0.0, 1.0 - margins).sum()
    return 0.5 * float(w @ w) + C * float(hinges), float(hinges)


def ranksvm_train(
    features: Mapping[str, np.ndarray],
    psi: Sequence[PairLabel],
    C: float = 1.0,
    seed: int = 0,
    steps: int = 10_000,
    lr0: float = 0.5,
) -> LinearRanker:
    """Fit the ranker on the ordered pair set by subgradient descent.

    Deterministic given the seed (used for the small random init). Steps decay
    as lr0 / (1 + t/steps_scale) which is ample for desk-scale pair counts.
    """
    if not psi:
        raise SkillRankError("RankSVM training requires a nonempty pair set")
    if C <= 0:
        raise SkillRankError(f"C must be > 0, got {C}")
    for pair in psi:
        for video in (pair.i, pair.j):
            if video not in features:
                raise DataError(f"no features for video {video!r}")
    diffs = np.stack(
        [np.asarray(features[p.i], dtype=np.float64) - np.asarray(features[p.j], dtype=np.float64) for p in psi]
    )
    dim = diffs.shape[1]
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1e-3, 1e-3, size=dim)
    for t in range(steps):
        margins = diffs @ w
        violated = margins < 1.0
        subgrad = w - C * diffs[violated].sum(axis=0)
        lr = lr0 / (1.0 + 10.0 * t / steps)
        w = w - lr * subgrad
    return LinearRanker(w=w, C=C)


def ranksvm_score(
    rankers: Mapping[Modality, LinearRanker],
    features: Mapping[Modality, Mapping[str, np.ndarray]],
    alpha: float,
    task_id: str = "",
) -> SkillRanking:
    """Late-fused per-video scores, descending ranking."""
    rankers = {Modality(m): r for m, r in rankers.items()}
    features = {Modality(m): f for m, f in features.items()}
    for modality in (Modality.SPATIAL, Modality.TEMPORAL):
        if modality not in rankers or modality not in features:
            raise DataError(f"missing {modality.value} ranker or features")
    videos = sorted(features[Modality.SPATIAL])
    scores = {}
    for video in videos:
        if video not in features[Modality.TEMPORAL]:
            raise DataError(f"video {video!r} lacks temporal features")
        s = rankers[Modality.SPATIAL].score(features[Modality.SPATIAL][video])
        t = rankers[Modality.TEMPORAL].score(features[Modality.TEMPORAL][video])
        scores[video] = fuse(s, t, alpha)
    return SkillRanking(task_id=task_id, scores=scores)
