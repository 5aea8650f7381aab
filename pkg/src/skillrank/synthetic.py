"""Planted latent-skill generators used by the test suite and the experiment
scripts. Each video gets a scalar skill; per-snippet features are a smooth
function of that skill plus a time-varying component and Gaussian noise.

The signal-to-noise ratio is defined along the skill direction: the variance
of the skill component across videos divided by the per-coordinate noise
variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotation import PairLabel, PairSets, pairs_from_scores
from .datastore import (
    FeatureSequence,
    Modality,
    TaskDataset,
    write_feature_sequence,
    write_manifest,
)
from .seeding import derive_seed


@dataclass
class SyntheticTask:
    dataset: TaskDataset
    skills: dict[str, float]
    pairs: PairSets


def _smooth_skill_response(s: np.ndarray | float) -> np.ndarray | float:
    # Monotone and smooth on [0, 1]: derivative stays within [1 - pi/4, 1 + pi/4].
    return s + 0.25 * np.sin(np.pi * s)


def _sequence(
    video_id: str,
    modality: Modality,
    skill: float,
    length: int,
    dim: int,
    noise_sd: float,
    time_amp: float,
    rng: np.random.Generator,
    direction: np.ndarray,
    time_direction: np.ndarray,
) -> FeatureSequence:
    t = np.arange(length) / max(length - 1, 1)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    signal = float(_smooth_skill_response(skill)) * direction
    wave = time_amp * np.sin(2.0 * np.pi * t + phase)[:, None] * time_direction
    noise = rng.normal(0.0, noise_sd, size=(length, dim))
    rows = signal[None, :] + wave + noise
    return FeatureSequence(video_id=video_id, modality=modality, rows=rows.astype(np.float32))


def _directions(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    v = rng.normal(size=dim)
    v -= (v @ u) * u
    v /= np.linalg.norm(v)
    return u, v


def _build_dataset(
    task_id: str,
    skills: dict[str, float],
    lengths: dict[str, int],
    dim: int,
    noise_sd: float,
    time_amp: float,
    seed: int,
) -> TaskDataset:
    sequences = {}
    for modality in (Modality.SPATIAL, Modality.TEMPORAL):
        dir_rng = np.random.default_rng(derive_seed(seed, "directions", modality.value))
        direction, time_direction = _directions(dim, dir_rng)
        for video, skill in skills.items():
            rng = np.random.default_rng(derive_seed(seed, "video", modality.value, video))
            sequences[(video, modality)] = _sequence(
                video,
                modality,
                skill,
                lengths[video],
                dim,
                noise_sd,
                time_amp,
                rng,
                direction,
                time_direction,
            )
    return TaskDataset(
        task_id=task_id,
        modalities=(Modality.SPATIAL, Modality.TEMPORAL),
        videos=tuple(sorted(skills)),
        sequences=sequences,
        scores={v: float(s) for v, s in skills.items()},
    )


def make_latent_skill_task(
    n_videos: int = 40,
    dim: int = 12,
    snr: float = 5.0,
    seed: int = 0,
    length_range: tuple[int, int] = (40, 90),
    time_amp: float = 0.2,
    n_tie_pairs: int = 5,
    task_id: str = "synthetic",
) -> SyntheticTask:
    """Videos with uniform skills; pair sets derived from the skill scores.

    `n_tie_pairs` disjoint video pairs share an identical skill so the
    similar-pair set is nonempty (ties are exact, so pairs_from_scores puts
    them in phi).
    """
    rng = np.random.default_rng(derive_seed(seed, "skills"))
    videos = [f"v{idx:03d}" for idx in range(n_videos)]
    skills = dict(zip(videos, rng.uniform(0.0, 1.0, size=n_videos)))
    tie_targets = videos[: 2 * n_tie_pairs]
    for a, b in zip(tie_targets[0::2], tie_targets[1::2]):
        skills[b] = skills[a]
    lengths = {
        v: int(rng.integers(length_range[0], length_range[1] + 1)) for v in videos
    }
    skill_var = float(np.var(list(skills.values())))
    noise_sd = float(np.sqrt(skill_var / snr))
    dataset = _build_dataset(task_id, skills, lengths, dim, noise_sd, time_amp, seed)
    return SyntheticTask(dataset=dataset, skills=skills, pairs=pairs_from_scores(skills))


def make_clustered_task(
    n_clusters: int = 8,
    cluster_size: int = 3,
    dim: int = 8,
    snr: float = 25.0,
    seed: int = 0,
    within_spread: float = 0.35,
    length_range: tuple[int, int] = (40, 70),
    time_amp: float = 0.15,
    task_id: str = "clustered",
) -> SyntheticTask:
    """Skill levels grouped into clusters; within-cluster pairs are similar.

    psi holds every cross-cluster pair (higher cluster wins); phi holds every
    within-cluster pair. Cluster spacing is 1 skill unit before rescaling, with
    members offset by up to +/- within_spread, so ordering across clusters
    stays unambiguous while within-cluster gaps are genuinely small.
    """
    if not 0.0 < within_spread < 0.5:
        raise ValueError("within_spread must sit in (0, 0.5)")
    rng = np.random.default_rng(derive_seed(seed, "clusters"))
    skills: dict[str, float] = {}
    cluster_of: dict[str, int] = {}
    for c in range(n_clusters):
        offsets = rng.uniform(-within_spread, within_spread, size=cluster_size)
        for member, offset in enumerate(offsets):
            video = f"c{c:02d}m{member}"
            skills[video] = float(c + offset)
            cluster_of[video] = c
    # Rescale to [0, 1] so the smooth response stays in its monotone range.
    values = np.array(list(skills.values()))
    low, high = values.min(), values.max()
    skills = {v: (s - low) / (high - low) for v, s in skills.items()}

    videos = sorted(skills)
    psi, phi = [], []
    for a_idx, a in enumerate(videos):
        for b in videos[a_idx + 1 :]:
            if cluster_of[a] == cluster_of[b]:
                phi.append(PairLabel.make(a, b, 0))
            elif cluster_of[a] > cluster_of[b]:
                psi.append(PairLabel(a, b, 1))
            else:
                psi.append(PairLabel(b, a, 1))

    lengths = {
        v: int(rng.integers(length_range[0], length_range[1] + 1)) for v in videos
    }
    skill_var = float(np.var(list(skills.values())))
    noise_sd = float(np.sqrt(skill_var / snr))
    dataset = _build_dataset(task_id, skills, lengths, dim, noise_sd, time_amp, seed)
    return SyntheticTask(
        dataset=dataset, skills=skills, pairs=PairSets(psi=psi, phi=phi)
    )


def write_task(task: SyntheticTask, out_dir: str | Path, with_scores: bool = True) -> Path:
    """Materialize a synthetic task as feature files + manifest; returns the
    manifest path. Normalization is left for `skillrank ingest`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for video in task.dataset.videos:
        files = {}
        for modality in task.dataset.modalities:
            rel = f"{video}.{modality.value}.skf"
            write_feature_sequence(task.dataset.sequences[(video, modality)], out_dir / rel)
            files[modality.value] = rel
        entry: dict = {"id": video, "files": files}
        if with_scores and video in task.dataset.scores:
            entry["score"] = task.dataset.scores[video]
        entries.append(entry)
    manifest = {
        "task_id": task.dataset.task_id,
        "modalities": [m.value for m in task.dataset.modalities],
        "videos": entries,
    }
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def write_pairs_file(pairs: PairSets, path: str | Path) -> None:
    with open(path, "w") as fh:
        for pair in [*pairs.psi, *pairs.phi]:
            fh.write(json.dumps({"i": pair.i, "j": pair.j, "label": pair.label}) + "\n")
