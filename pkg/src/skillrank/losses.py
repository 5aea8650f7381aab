"""Pairwise ranking objectives over clip scores.

rank terms: max(0, m - s_i + s_j), driving consistent pairs apart by the
margin. sim terms: max(0, |s_i - s_j| - m), pulling similar pairs within the
margin. The split objective sums rank terms over the N index-paired splits of
a pair; the mixed objective blends the two with weight beta.

Values returned here are plain sums over their terms; per-batch mean
normalization is the trainer's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, SkillRankError


@dataclass(frozen=True)
class LossConfig:
    margin: float = 1.0
    beta: float = 0.5
    splits: int = 7

    def __post_init__(self):
        if not self.margin > 0:
            raise SkillRankError(f"margin must be > 0, got {self.margin}")
        if not 0.0 <= self.beta <= 1.0:
            raise SkillRankError(f"beta must be in [0, 1], got {self.beta}")
        if self.splits < 1:
            raise SkillRankError(f"split count must be >= 1, got {self.splits}")


def rank_term(si: float, sj: float, m: float) -> tuple[float, float, float]:
    """max(0, m - si + sj) with its subgradient w.r.t. (si, sj).

    Gradient is (-1, +1) when the margin is violated, (0, 0) otherwise
    (including at the kink).
    """
    slack = m - si + sj
    if slack > 0.0:
        return slack, -1.0, 1.0
    return 0.0, 0.0, 0.0


def sim_term(si: float, sj: float, m: float) -> tuple[float, float, float]:
    """max(0, |si - sj| - m) with its subgradient w.r.t. (si, sj)."""
    gap = si - sj
    value = abs(gap) - m
    if value > 0.0:
        sign = 1.0 if gap > 0.0 else -1.0
        return value, sign, -sign
    return 0.0, 0.0, 0.0


def rank_terms(
    si: np.ndarray, sj: np.ndarray, m: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized rank_term over aligned score arrays."""
    si = np.asarray(si, dtype=np.float64)
    sj = np.asarray(sj, dtype=np.float64)
    slack = m - si + sj
    active = slack > 0.0
    values = np.where(active, slack, 0.0)
    dsi = np.where(active, -1.0, 0.0)
    dsj = np.where(active, 1.0, 0.0)
    return values, dsi, dsj


def sim_terms(
    si: np.ndarray, sj: np.ndarray, m: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized sim_term over aligned score arrays."""
    si = np.asarray(si, dtype=np.float64)
    sj = np.asarray(sj, dtype=np.float64)
    gap = si - sj
    values = np.abs(gap) - m
    active = values > 0.0
    sign = np.sign(gap)
    return (
        np.where(active, values, 0.0),
        np.where(active, sign, 0.0),
        np.where(active, -sign, 0.0),
    )


SplitScores = Sequence[tuple[Sequence[float], Sequence[float]]]
# One entry per pair: (per-split scores of the higher video, of the lower video),
# paired by equal split index k.


def _check_paired(split_scores: SplitScores) -> None:
    for pair_idx, (si, sj) in enumerate(split_scores):
        if len(si) != len(sj):
            raise DimensionError(
                f"pair {pair_idx}: split counts differ ({len(si)} vs {len(sj)})"
            )


def loss_rank2(
    split_scores: SplitScores, m: float
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Sum of rank terms over all pairs and all index-paired splits.

    Returns the total and, per pair, gradient arrays aligned with the split
    scores. With a single split this is exactly the plain ranking loss.
    """
    _check_paired(split_scores)
    total = 0.0
    grads = []
    for si, sj in split_scores:
        values, dsi, dsj = rank_terms(np.asarray(si), np.asarray(sj), m)
        total += float(values.sum())
        grads.append((dsi, dsj))
    return total, grads


def loss_sim(
    split_scores: SplitScores, m: float
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Sum of sim terms over all pairs and all index-paired splits."""
    _check_paired(split_scores)
    total = 0.0
    grads = []
    for si, sj in split_scores:
        values, dsi, dsj = sim_terms(np.asarray(si), np.asarray(sj), m)
        total += float(values.sum())
        grads.append((dsi, dsj))
    return total, grads


def loss_rank3(
    psi_split_scores: SplitScores,
    phi_split_scores: SplitScores,
    beta: float,
    m: float,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]], list[tuple[np.ndarray, np.ndarray]]]:
    """beta * rank losses over psi + (1 - beta) * sim losses over phi.

    Gradients come back scaled by their mixture weight. beta=1 reduces to
    loss_rank2 exactly; beta=0 to loss_sim exactly.
    """
    if not 0.0 <= beta <= 1.0:
        raise SkillRankError(f"beta must be in [0, 1], got {beta}")
    rank_total, rank_grads = loss_rank2(psi_split_scores, m)
    sim_total, sim_grads = loss_sim(phi_split_scores, m)
    total = beta * rank_total + (1.0 - beta) * sim_total
    psi_grads = [(beta * dsi, beta * dsj) for dsi, dsj in rank_grads]
    phi_grads = [((1.0 - beta) * dsi, (1.0 - beta) * dsj) for dsi, dsj in sim_grads]
    return total, psi_grads, phi_grads
