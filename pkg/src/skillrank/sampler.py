"""Temporal decomposition: uniform splits, 3 segments per split, snippet draws.

All randomness is seeded; training draws are reproducible from
(seed, video_id, split_index).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import SamplingError
from .seeding import derive_seed

SEGMENTS_PER_SPLIT = 3


class SnippetMode(str, Enum):
    UNIFORM = "uniform"
    START = "start"
    END = "end"
    RANDOM = "random"


@dataclass(frozen=True)
class SplitPlan:
    """One of the N uniform splits of a video, cut into 3 segments.

    Ranges are half-open row intervals. The 3 segments tile the split.
    """

    video_id: str
    split_index: int  # 1-based k
    segments: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


def _partition(start: int, stop: int, parts: int) -> list[tuple[int, int]]:
    # Earlier parts take the remainder row, so sizes are non-increasing.
    total = stop - start
    base, extra = divmod(total, parts)
    ranges = []
    cursor = start
    for p in range(parts):
        size = base + (1 if p < extra else 0)
        ranges.append((cursor, cursor + size))
        cursor += size
    return ranges


def uniform_splits(length: int, n: int) -> list[tuple[int, int]]:
    """Cut [0, length) into n contiguous ranges, sizes differing by at most 1.

    Each split must admit 3 nonempty segments, so length >= 3*n.
    """
    if n < 1:
        raise SamplingError(f"split count must be >= 1, got {n}")
    minimum = SEGMENTS_PER_SPLIT * n
    if length < minimum:
        raise SamplingError(
            f"sequence of {length} rows is too short for {n} splits; minimum is {minimum}"
        )
    return _partition(0, length, n)


def split_plans(video_id: str, length: int, n: int) -> list[SplitPlan]:
    """Build the full plan: n splits, each with its 3 segment ranges."""
    plans = []
    for k, (start, stop) in enumerate(uniform_splits(length, n), start=1):
        segments = tuple(_partition(start, stop, SEGMENTS_PER_SPLIT))
        plans.append(SplitPlan(video_id=video_id, split_index=k, segments=segments))
    return plans


def sample_training_snippets(plan: SplitPlan, rng_seed: int) -> tuple[int, int, int]:
    """Draw one uniformly random row index from each of the plan's 3 segments.

    Deterministic given (rng_seed, plan.video_id, plan.split_index).
    """
    rng = np.random.default_rng(derive_seed(rng_seed, plan.video_id, plan.split_index))
    return tuple(int(rng.integers(start, stop)) for start, stop in plan.segments)


def sample_snippet_batch(bounds: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized training draw: one index per segment.

    `bounds` is (..., 2) with half-open [start, stop) ranges; returns an
    integer array of the leading shape. Same per-segment uniform distribution
    as sample_training_snippets, used by the trainer's batched loop.
    """
    starts = bounds[..., 0]
    spans = bounds[..., 1] - starts
    return starts + (rng.random(starts.shape) * spans).astype(np.int64)


def test_snippets(
    length: int,
    sigma: int,
    mode: SnippetMode | str = SnippetMode.UNIFORM,
    rng_seed: int = 0,
) -> list[int]:
    """Row indices used to score a video at test time, sorted ascending.

    uniform: center-of-bin indices floor((t+0.5)*length/sigma), deduplicated
    when the video is shorter than sigma. start/end: the first/last
    min(sigma, length) rows. random: sigma distinct seeded uniform indices
    (all rows when length < sigma).
    """
    if length < 1:
        raise SamplingError(f"length must be >= 1, got {length}")
    if sigma < 1:
        raise SamplingError(f"sigma must be >= 1, got {sigma}")
    mode = SnippetMode(mode)
    count = min(sigma, length)
    if mode is SnippetMode.UNIFORM:
        raw = (np.arange(sigma) + 0.5) * length / sigma
        return sorted(set(int(v) for v in np.floor(raw)))
    if mode is SnippetMode.START:
        return list(range(count))
    if mode is SnippetMode.END:
        return list(range(length - count, length))
    rng = np.random.default_rng(rng_seed)
    return sorted(int(i) for i in rng.choice(length, size=count, replace=False))
