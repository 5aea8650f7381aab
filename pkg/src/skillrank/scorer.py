"""The shared-weight scoring function: a small MLP (or plain linear map) that
maps one snippet's feature vector to a scalar skill score.

Both branches of a training pair are scored by the same parameter object, so
weight sharing holds by construction. Forward passes are vectorized over rows;
backward passes return exact analytic gradients.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArchitectureError, DimensionError

PARAMS_MAGIC = b"SKP1"

# Hidden widths of the fully connected comparison head this package defaults
# to, kept only where they fit under the ingested feature dim.
_HEAD_WIDTHS = (1000, 512, 256, 128, 64)

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    hidden: tuple[int, ...] = ()
    activation: str = "relu"
    # Train-time dropout on hidden activations. Off by default; applied only
    # when the caller supplies a seeded generator, so inference and the core
    # test suite stay deterministic.
    dropout: float = 0.0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ArchitectureError(f"input_dim must be >= 1, got {self.input_dim}")
        if any(w < 1 for w in self.hidden):
            raise ArchitectureError(f"zero-width layer in {self.hidden}")
        if self.activation not in ACTIVATIONS:
            raise ArchitectureError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ArchitectureError(f"dropout must be in [0, 1), got {self.dropout}")
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per layer, ending in the scalar output layer."""
        widths = [self.input_dim, *self.hidden, 1]
        return list(zip(widths[:-1], widths[1:]))

    def to_json(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "activation": self.activation,
            "dropout": self.dropout,
        }

    @staticmethod
    def from_json(doc: dict) -> "Architecture":
        return Architecture(
            input_dim=int(doc["input_dim"]),
            hidden=tuple(doc.get("hidden", ())),
            activation=doc.get("activation", "relu"),
            dropout=float(doc.get("dropout", 0.0)),
        )


def default_architecture(input_dim: int, activation: str = "relu") -> Architecture:
    hidden = tuple(w for w in _HEAD_WIDTHS if w <= input_dim)
    return Architecture(input_dim=input_dim, hidden=hidden, activation=activation)


@dataclass
class ScorerParams:
    arch: Architecture
    weights: list[np.ndarray]  # (out, in) float64 per layer
    biases: list[np.ndarray]  # (out,) float64 per layer

    def validate(self) -> None:
        dims = self.arch.layer_dims
        if len(self.weights) != len(dims) or len(self.biases) != len(dims):
            raise ArchitectureError("layer count does not match architecture")
        for (fan_in, fan_out), w, b in zip(dims, self.weights, self.biases):
            if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
                raise ArchitectureError(
                    f"layer shape {w.shape}/{b.shape} != ({fan_out},{fan_in})/({fan_out},)"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ArchitectureError("non-finite parameter value")

    def copy(self) -> "ScorerParams":
        return ScorerParams(
            arch=self.arch,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class Gradients:
    """d(loss)/d(parameter), shape-congruent with the owning ScorerParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @staticmethod
    def zeros_like(params: ScorerParams) -> "Gradients":
        return Gradients(
            weights=[np.zeros_like(w) for w in params.weights],
            biases=[np.zeros_like(b) for b in params.biases],
        )

    def add(self, other: "Gradients") -> "Gradients":
        for mine, theirs in zip(self.weights, other.weights):
            mine += theirs
        for mine, theirs in zip(self.biases, other.biases):
            mine += theirs
        return self

    def scale(self, factor: float) -> "Gradients":
        for w in self.weights:
            w *= factor
        for b in self.biases:
            b *= factor
        return self


def init_params(arch: Architecture, seed: int) -> ScorerParams:
    """Fan-in-scaled symmetric uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in arch.layer_dims:
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    params = ScorerParams(arch=arch, weights=weights, biases=biases)
    params.validate()
    return params


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        # Subgradient 0 at the kink.
        return (z > 0.0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


def forward_rows(
    params: ScorerParams,
    rows: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list]:
    """Score a batch of snippets; returns (scores (n,), cache for backward).

    Passing a seeded `dropout_rng` enables inverted dropout on the hidden
    activations at the architecture's configured rate; with None (the
    default, and always at inference) no dropout is applied.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != params.arch.input_dim:
        raise DimensionError(
            f"snippet dim {x.shape[1]} != scorer input dim {params.arch.input_dim}"
        )
    rate = params.arch.dropout if dropout_rng is not None else 0.0
    cache = []
    h = x
    last = len(params.weights) - 1
    for idx, (w, b) in enumerate(zip(params.weights, params.biases)):
        layer_input = h
        z = layer_input @ w.T + b
        mask = None
        if idx == last:
            h = z
        else:
            h = _activate(z, params.arch.activation)
            if rate > 0.0:
                mask = (dropout_rng.random(h.shape) >= rate) / (1.0 - rate)
                h = h * mask
        cache.append((layer_input, z, mask))
    return h[:, 0], cache


def score_rows(params: ScorerParams, rows: np.ndarray) -> np.ndarray:
    return forward_rows(params, rows)[0]


def score_snippet(params: ScorerParams, x: np.ndarray) -> float:
    return float(score_rows(params, np.asarray(x))[0])


def score_clip(params: ScorerParams, snippets: np.ndarray) -> float:
    """Mean of the per-snippet scores: the pooled clip score f_k(p)."""
    return float(score_rows(params, np.asarray(snippets)).mean())


def backward_rows(
    params: ScorerParams, cache: list, upstream: np.ndarray
) -> Gradients:
    """Gradient of sum_n upstream[n] * score[n] w.r.t. every parameter.

    Replays any dropout masks recorded in the forward cache.
    """
    grads = Gradients.zeros_like(params)
    delta = np.asarray(upstream, dtype=np.float64)[:, None]  # (n, 1)
    last = len(params.weights) - 1
    for idx in range(last, -1, -1):
        h, z, mask = cache[idx]
        if idx != last:
            if mask is not None:
                delta = delta * mask
            delta = delta * _activation_grad(z, params.arch.activation)
        grads.weights[idx] += delta.T @ h
        grads.biases[idx] += delta.sum(axis=0)
        if idx > 0:
            delta = delta @ params.weights[idx]
    return grads


def backward(params: ScorerParams, snippets: np.ndarray, upstream: float) -> Gradients:
    """Gradient of upstream * score_clip(params, snippets).

    The clip score is the mean over snippets, so each snippet contributes
    upstream / n. Gradients from multiple clips accumulate additively via
    Gradients.add.
    """
    snippets = np.atleast_2d(np.asarray(snippets, dtype=np.float64))
    _, cache = forward_rows(params, snippets)
    n = snippets.shape[0]
    return backward_rows(params, cache, np.full(n, upstream / n))


def params_to_vector(params: ScorerParams) -> np.ndarray:
    parts = [a.ravel() for a in params.weights] + [a.ravel() for a in params.biases]
    return np.concatenate(parts)


def vector_to_params(vector: np.ndarray, arch: Architecture) -> ScorerParams:
    dims = arch.layer_dims
    weights, biases = [], []
    cursor = 0
    for fan_in, fan_out in dims:
        size = fan_in * fan_out
        weights.append(vector[cursor : cursor + size].reshape(fan_out, fan_in).copy())
        cursor += size
    for _, fan_out in dims:
        biases.append(vector[cursor : cursor + fan_out].copy())
        cursor += fan_out
    return ScorerParams(arch=arch, weights=weights, biases=biases)


def grads_to_vector(grads: Gradients) -> np.ndarray:
    parts = [a.ravel() for a in grads.weights] + [a.ravel() for a in grads.biases]
    return np.concatenate(parts)


def gradient_check(params: ScorerParams, loss_closure, step: float = 1e-5) -> float:
    """Worst coordinate-wise relative error between analytic and
    central-difference gradients.

    `loss_closure(params) -> (value, Gradients)` must be deterministic. The
    denominator is floored at 1e-6 so exactly-zero coordinates (e.g. a shared
    bias under a margin difference) do not amplify float noise in the
    numeric estimate.
    """
    _, analytic = loss_closure(params)
    analytic_vec = grads_to_vector(analytic)
    theta = params_to_vector(params)
    numeric = np.zeros_like(theta)
    for idx in range(len(theta)):
        bumped = theta.copy()
        bumped[idx] = theta[idx] + step
        up, _ = loss_closure(vector_to_params(bumped, params.arch))
        bumped[idx] = theta[idx] - step
        down, _ = loss_closure(vector_to_params(bumped, params.arch))
        numeric[idx] = (up - down) / (2.0 * step)
    scale = np.maximum(np.abs(analytic_vec) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic_vec - numeric) / scale))


def save_params(params: ScorerParams, path: str | Path, model: str = "scorer", extra: dict | None = None) -> None:
    """Versioned binary: magic, u32 header length, JSON header, flat f32 values."""
    params.validate()
    header = {"model": model, "version": 1, "architecture": params.arch.to_json()}
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = params_to_vector(params).astype("<f4").tobytes()
    Path(path).write_bytes(PARAMS_MAGIC + struct.pack("<I", len(blob)) + blob + payload)


def load_params(path: str | Path) -> tuple[ScorerParams, dict]:
    """Load a params binary; returns (params, header)."""
    data = Path(path).read_bytes()
    if data[:4] != PARAMS_MAGIC:
        raise ArchitectureError(f"{path}: not a params file")
    (blob_len,) = struct.unpack_from("<I", data, 4)
    header = json.loads(data[8 : 8 + blob_len])
    arch = Architecture.from_json(header["architecture"])
    vector = np.frombuffer(data, dtype="<f4", offset=8 + blob_len).astype(np.float64)
    expected = sum(fi * fo + fo for fi, fo in arch.layer_dims)
    if len(vector) != expected:
        raise ArchitectureError(
            f"{path}: expected {expected} parameters, found {len(vector)}"
        )
    params = vector_to_params(vector, arch)
    params.validate()
    return params, header
