"""On-disk data model: feature sequences, task manifests, pair label files.

Feature files are a small binary format: magic ``SKF1``, little-endian u32 row
count, u32 dim, then row-major float32 values. Manifests are JSON documents
listing per-video feature files plus optional expert scores and per-modality
normalization statistics.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DatasetError,
    MalformedHeaderError,
    NonFiniteValueError,
    TruncatedPayloadError,
)

MAGIC = b"SKF1"
_HEADER = struct.Struct("<4sII")


class Modality(str, Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class FeatureSequence:
    """Ordered per-snippet feature vectors for one video in one modality."""

    video_id: str
    modality: Modality
    rows: np.ndarray  # (n_rows, dim) float32, temporal order

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise DatasetError(f"rows must be 2-D, got shape {rows.shape}")
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DatasetError(f"empty feature sequence for {self.video_id}")
        if not np.isfinite(rows).all():
            raise DatasetError(f"non-finite feature value in {self.video_id}")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return int(self.rows.shape[0])


def write_feature_sequence(seq: FeatureSequence, path: str | Path) -> None:
    """Write `seq` in the binary feature format (bit-exact round trip)."""
    rows = np.ascontiguousarray(seq.rows, dtype="<f4")
    header = _HEADER.pack(MAGIC, rows.shape[0], rows.shape[1])
    Path(path).write_bytes(header + rows.tobytes())


def load_feature_sequence(
    path: str | Path,
    *,
    video_id: str | None = None,
    modality: Modality = Modality.SPATIAL,
) -> FeatureSequence:
    """Load and validate one feature file.

    The format carries no identity, so `video_id`/`modality` come from the
    caller (the manifest); `video_id` defaults to the file stem.

    Raises:
        MalformedHeaderError: bad magic, short header, or zero row/dim counts.
        TruncatedPayloadError: payload size disagrees with the header.
        NonFiniteValueError: a NaN/Inf value, located by row and column.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise MalformedHeaderError(
            f"{path}: header needs {_HEADER.size} bytes, file has {len(data)}",
            offset=len(data),
        )
    magic, n_rows, dim = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}", offset=0)
    if n_rows == 0:
        raise MalformedHeaderError(f"{path}: zero rows declared", offset=4)
    if dim == 0:
        raise MalformedHeaderError(f"{path}: zero dim declared", offset=8)

    expected = _HEADER.size + 4 * n_rows * dim
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "oversized"
        raise TruncatedPayloadError(
            f"{path}: {kind} payload, expected {expected} bytes, found {len(data)}",
            offset=len(data),
        )

    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    finite = np.isfinite(values)
    if not finite.all():
        idx = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValueError(
            f"{path}: non-finite value at row {idx // dim}, column {idx % dim}",
            offset=_HEADER.size + 4 * idx,
            row=idx // dim,
            column=idx % dim,
        )
    rows = values.reshape(n_rows, dim)
    return FeatureSequence(
        video_id=video_id if video_id is not None else path.stem,
        modality=Modality(modality),
        rows=rows,
    )


@dataclass
class TaskDataset:
    """All videos of one task with their per-modality feature sequences."""

    task_id: str
    modalities: tuple[Modality, ...]
    videos: tuple[str, ...]  # sorted
    sequences: dict[tuple[str, Modality], FeatureSequence]
    scores: dict[str, float] = field(default_factory=dict)

    def sequence(self, video_id: str, modality: Modality) -> FeatureSequence:
        try:
            return self.sequences[(video_id, Modality(modality))]
        except KeyError:
            raise DatasetError(f"no {Modality(modality).value} sequence for video {video_id!r}")

    def dim(self, modality: Modality) -> int:
        for video in self.videos:
            return self.sequences[(video, Modality(modality))].dim
        raise DatasetError("dataset has no videos")

    def validate(self) -> None:
        for video in self.videos:
            for modality in self.modalities:
                if (video, modality) not in self.sequences:
                    raise DatasetError(f"video {video!r} lacks a {modality.value} sequence")
        for modality in self.modalities:
            dims = {self.sequences[(v, modality)].dim for v in self.videos}
            if len(dims) > 1:
                raise DatasetError(
                    f"dim mismatch in modality {modality.value}: {sorted(dims)}"
                )


def compute_normalization(
    sequences: list[FeatureSequence],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate mean/std over all rows of all sequences of one modality.

    Coordinates with zero spread get std 1.0 so normalization stays defined.
    """
    stacked = np.concatenate([s.rows.astype(np.float64) for s in sequences], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def _normalized(seq: FeatureSequence, mean: np.ndarray, std: np.ndarray) -> FeatureSequence:
    rows = ((seq.rows.astype(np.float64) - mean) / std).astype(np.float32)
    return FeatureSequence(video_id=seq.video_id, modality=seq.modality, rows=rows)


def validate_dataset(manifest_path: str | Path) -> TaskDataset:
    """Load the manifest, every feature file it references, and validate.

    Paths in the manifest resolve relative to the manifest's directory. When
    the manifest carries normalization statistics they are applied to every
    sequence of that modality at load time.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{manifest_path}: not valid JSON: {e}")

    for key in ("task_id", "modalities", "videos"):
        if key not in doc:
            raise DatasetError(f"{manifest_path}: manifest missing {key!r}")

    modalities = tuple(Modality(m) for m in doc["modalities"])
    base = manifest_path.parent

    normalization: dict[Modality, tuple[np.ndarray, np.ndarray]] = {}
    for name, stats in (doc.get("normalization") or {}).items():
        mean = np.asarray(stats["mean"], dtype=np.float64)
        std = np.asarray(stats["std"], dtype=np.float64)
        if (std <= 0).any():
            raise DatasetError(f"non-positive std in normalization for {name!r}")
        normalization[Modality(name)] = (mean, std)

    videos: list[str] = []
    sequences: dict[tuple[str, Modality], FeatureSequence] = {}
    scores: dict[str, float] = {}
    for entry in doc["videos"]:
        video_id = entry["id"]
        if video_id in videos:
            raise DatasetError(f"duplicate video id {video_id!r}")
        videos.append(video_id)
        files = entry.get("files", {})
        for modality in modalities:
            if modality.value not in files:
                raise DatasetError(
                    f"video {video_id!r} has no {modality.value} file in the manifest"
                )
            seq = load_feature_sequence(
                base / files[modality.value], video_id=video_id, modality=modality
            )
            if modality in normalization:
                mean, std = normalization[modality]
                if len(mean) != seq.dim or len(std) != seq.dim:
                    raise DatasetError(
                        f"normalization length {len(mean)} does not match dim {seq.dim}"
                    )
                seq = _normalized(seq, mean, std)
            sequences[(video_id, modality)] = seq
        if "score" in entry and entry["score"] is not None:
            scores[video_id] = float(entry["score"])

    dataset = TaskDataset(
        task_id=doc["task_id"],
        modalities=modalities,
        videos=tuple(sorted(videos)),
        sequences=sequences,
        scores=scores,
    )
    dataset.validate()
    return dataset


def write_manifest(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
