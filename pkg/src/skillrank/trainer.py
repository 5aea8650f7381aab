"""Siamese training loop: momentum SGD over batches of pair-terms.

A pair-term is one (pair, split) comparison. Each iteration draws a batch of
terms (without replacement within an epoch), resamples one snippet per segment
for both videos, scores all snippets with the single shared parameter object,
applies the configured ranking/similarity terms, and takes a momentum SGD step
on the batch-mean gradient: v <- mu*v - lr*grad, theta <- theta + v.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import losses, sampler, scorer
from .annotation import PairLabel
from .datastore import Modality, TaskDataset
from .errors import DataError, SkillRankError, TrainingError
from .seeding import derive_seed


class LossVariant(str, Enum):
    RANK1 = "rank1"
    RANK2 = "rank2"
    RANK3 = "rank3"


# Schedules are (start_iteration, learning_rate) steps. Full-scale schedules
# suit fine-tuned convolutional backbones; the desk-scale defaults divide
# every iteration count by 10, which is plenty for the feature-level scorers
# trained here (config-overridable).
FULL_SPATIAL_SCHEDULE = ((0, 1e-3), (1500, 1e-4), (3000, 1e-5))
FULL_SPATIAL_ITERATIONS = 3500
FULL_TEMPORAL_SCHEDULE = ((0, 5e-3), (10000, 5e-4), (16000, 5e-5))
FULL_TEMPORAL_ITERATIONS = 18000

DESK_SPATIAL_SCHEDULE = ((0, 1e-3), (150, 1e-4), (300, 1e-5))
DESK_SPATIAL_ITERATIONS = 350
DESK_TEMPORAL_SCHEDULE = ((0, 5e-3), (1000, 5e-4), (1600, 5e-5))
DESK_TEMPORAL_ITERATIONS = 1800


@dataclass(frozen=True)
class TrainConfig:
    variant: LossVariant = LossVariant.RANK3
    margin: float = 1.0
    splits: int = 7
    beta: float = 0.5
    batch_size: int = 128
    momentum: float = 0.9
    lr_schedule: tuple[tuple[int, float], ...] = DESK_SPATIAL_SCHEDULE
    max_iterations: int = DESK_SPATIAL_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", LossVariant(self.variant))
        object.__setattr__(
            self, "lr_schedule", tuple((int(s), float(r)) for s, r in self.lr_schedule)
        )
        if self.batch_size < 1:
            raise SkillRankError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise SkillRankError(f"momentum must be in [0, 1), got {self.momentum}")
        if not self.margin > 0:
            raise SkillRankError(f"margin must be > 0, got {self.margin}")
        if not 0.0 <= self.beta <= 1.0:
            raise SkillRankError(f"beta must be in [0, 1], got {self.beta}")
        if self.splits < 1:
            raise SkillRankError(f"splits must be >= 1, got {self.splits}")
        if self.max_iterations < 1:
            raise SkillRankError(f"max_iterations must be >= 1")
        if not self.lr_schedule:
            raise SkillRankError("lr_schedule cannot be empty")
        starts = [s for s, _ in self.lr_schedule]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise SkillRankError(f"schedule thresholds must strictly increase: {starts}")

    @property
    def effective_splits(self) -> int:
        """rank1 compares whole videos: a single split."""
        return 1 if self.variant is LossVariant.RANK1 else self.splits


def default_train_config(modality: Modality, **overrides) -> TrainConfig:
    if Modality(modality) is Modality.SPATIAL:
        base = dict(lr_schedule=DESK_SPATIAL_SCHEDULE, max_iterations=DESK_SPATIAL_ITERATIONS)
    else:
        base = dict(lr_schedule=DESK_TEMPORAL_SCHEDULE, max_iterations=DESK_TEMPORAL_ITERATIONS)
    base.update(overrides)
    return TrainConfig(**base)


def lr_at(schedule: Sequence[tuple[int, float]], iteration: int) -> float:
    """Piecewise-constant rate: the last schedule entry at or before iteration."""
    if iteration < 0:
        raise SkillRankError(f"iteration must be >= 0, got {iteration}")
    rate = schedule[0][1]
    for start, lr in schedule:
        if iteration >= start:
            rate = lr
    return rate


@dataclass
class TracePoint:
    iteration: int
    loss: float
    lr: float


@dataclass
class TrainResult:
    params: scorer.ScorerParams
    trace: list[TracePoint] = field(default_factory=list)


def write_trace(trace: Sequence[TracePoint], path: str | Path) -> None:
    with open(path, "w") as fh:
        for point in trace:
            fh.write(
                json.dumps(
                    {"iteration": point.iteration, "loss": point.loss, "lr": point.lr}
                )
                + "\n"
            )


def _gather_segment_bounds(
    dataset: TaskDataset,
    modality: Modality,
    videos: list[str],
    n_splits: int,
) -> tuple[np.ndarray, np.ndarray, dict[str, int]]:
    """Concatenate all sequences and precompute global segment bounds.

    Returns (rows (total, dim), bounds (n_videos, n_splits, 3, 2), index map).
    Bounds carry each video's global row offset so one fancy-indexing gather
    serves the whole batch.
    """
    index = {video: pos for pos, video in enumerate(videos)}
    blocks = []
    bounds = np.empty((len(videos), n_splits, 3, 2), dtype=np.int64)
    offset = 0
    for video in videos:
        seq = dataset.sequence(video, modality)
        blocks.append(seq.rows.astype(np.float64))
        for plan in sampler.split_plans(video, len(seq), n_splits):
            for seg_idx, (start, stop) in enumerate(plan.segments):
                bounds[index[video], plan.split_index - 1, seg_idx] = (
                    offset + start,
                    offset + stop,
                )
        offset += len(seq)
    return np.concatenate(blocks, axis=0), bounds, index


def train_stream(
    dataset: TaskDataset,
    modality: Modality,
    psi: Sequence[PairLabel],
    phi: Sequence[PairLabel],
    cfg: TrainConfig,
    arch: scorer.Architecture | None = None,
) -> TrainResult:
    """Train one stream's scorer on the consistent/similar pair sets.

    Fully deterministic given cfg.seed. Returns the final parameters and the
    per-iteration batch loss trace.
    """
    modality = Modality(modality)
    if not psi:
        raise TrainingError("training requires a nonempty consistent pair set")
    use_phi = cfg.variant is LossVariant.RANK3 and cfg.beta < 1.0
    if cfg.variant is LossVariant.RANK3 and cfg.beta < 1.0 and not phi:
        raise TrainingError("rank3 with beta < 1 requires a nonempty similar pair set")
    phi = list(phi) if use_phi else []

    n_splits = cfg.effective_splits
    videos = sorted({v for p in [*psi, *phi] for v in (p.i, p.j)})
    for video in videos:
        if (video, modality) not in dataset.sequences:
            raise DataError(f"video {video!r} has no {modality.value} sequence")
    rows, bounds, index = _gather_segment_bounds(dataset, modality, videos, n_splits)

    if arch is None:
        arch = scorer.default_architecture(int(rows.shape[1]))

    # Term pool: one entry per (pair, split); sim terms carry weight (1-beta).
    pairs = [*psi, *phi]
    n_pairs = len(pairs)
    left = np.repeat([index[p.i] for p in pairs], n_splits)
    right = np.repeat([index[p.j] for p in pairs], n_splits)
    split_of = np.tile(np.arange(n_splits), n_pairs)
    is_sim = np.repeat([p.label == 0 for p in pairs], n_splits)
    if cfg.variant is LossVariant.RANK3:
        term_weight = np.where(is_sim, 1.0 - cfg.beta, cfg.beta)
    else:
        term_weight = np.ones(len(left))
    n_terms = len(left)

    params = scorer.init_params(arch, derive_seed(cfg.seed, "init", modality.value))
    velocity = scorer.Gradients.zeros_like(params)
    batch_rng = np.random.default_rng(derive_seed(cfg.seed, "train", modality.value, "batches"))

    trace: list[TracePoint] = []
    epoch_order = np.empty(0, dtype=np.int64)
    cursor = 0
    for iteration in range(cfg.max_iterations):
        if cursor >= len(epoch_order):
            epoch_order = batch_rng.permutation(n_terms)
            cursor = 0
        ids = epoch_order[cursor : cursor + cfg.batch_size]
        cursor += len(ids)
        batch = len(ids)

        snippet_rng = np.random.default_rng(
            derive_seed(cfg.seed, "train", modality.value, "snippets", iteration)
        )
        seg_bounds = np.stack(
            [bounds[left[ids], split_of[ids]], bounds[right[ids], split_of[ids]]],
            axis=1,
        )  # (batch, 2, 3, 2)
        snippet_idx = sampler.sample_snippet_batch(seg_bounds, snippet_rng)
        x = rows[snippet_idx.reshape(-1)]  # (batch*6, dim)

        dropout_rng = None
        if arch.dropout > 0.0:
            dropout_rng = np.random.default_rng(
                derive_seed(cfg.seed, "train", modality.value, "dropout", iteration)
            )
        scores, cache = scorer.forward_rows(params, x, dropout_rng=dropout_rng)
        clip_scores = scores.reshape(batch, 2, 3).mean(axis=2)
        si, sj = clip_scores[:, 0], clip_scores[:, 1]

        sim_mask = is_sim[ids]
        weight = term_weight[ids]
        values = np.empty(batch)
        dsi = np.empty(batch)
        dsj = np.empty(batch)
        rank_mask = ~sim_mask
        if rank_mask.any():
            v, gi, gj = losses.rank_terms(si[rank_mask], sj[rank_mask], cfg.margin)
            values[rank_mask], dsi[rank_mask], dsj[rank_mask] = v, gi, gj
        if sim_mask.any():
            v, gi, gj = losses.sim_terms(si[sim_mask], sj[sim_mask], cfg.margin)
            values[sim_mask], dsi[sim_mask], dsj[sim_mask] = v, gi, gj

        batch_loss = float((weight * values).sum() / batch)
        upstream_clip = np.stack([weight * dsi, weight * dsj], axis=1) / batch
        upstream = np.repeat(upstream_clip.reshape(-1), 3) / 3.0
        grads = scorer.backward_rows(params, cache, upstream)

        lr = lr_at(cfg.lr_schedule, iteration)
        for layer in range(len(params.weights)):
            velocity.weights[layer] *= cfg.momentum
            velocity.weights[layer] -= lr * grads.weights[layer]
            params.weights[layer] += velocity.weights[layer]
            velocity.biases[layer] *= cfg.momentum
            velocity.biases[layer] -= lr * grads.biases[layer]
            params.biases[layer] += velocity.biases[layer]

        trace.append(TracePoint(iteration=iteration, loss=batch_loss, lr=lr))

    return TrainResult(params=params, trace=trace)
