"""Compact multi-label MLP: forward pass, backprop, BCE loss, Adam.

Written directly in numpy so the whole training path is inspectable and
bit-reproducible. Hidden layers use ReLU, the output layer sigmoid; the loss
is mean binary cross-entropy over labels. Internally losses and gradients go
through the logit formulation to stay finite for saturated outputs; the
clamped probability form in :func:`bce_loss` is the observable contract.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and optimizer settings for the fault classifier."""

    input_dim: int = 12
    hidden_dims: tuple[int, ...] = (64, 32)
    output_dim: int = 4
    learning_rate: float = 1e-3
    batch_size: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) <= 0 for d in dims):
            raise ValueError(f"model dimensions must be positive, got {dims}")
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if not (0.0 < self.adam_beta1 < 1.0 and 0.0 < self.adam_beta2 < 1.0):
            raise ValueError("adam betas must lie in (0, 1)")
        if self.adam_eps <= 0.0:
            raise ValueError("adam_eps must be > 0")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be > 0")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)


@dataclass
class ModelParams:
    """Dense-layer weights (out x in) and biases, one entry per layer.

    Also used as the container for gradients, which mirror these shapes.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]

    def allfinite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


@dataclass
class AdamState:
    """First/second moment estimates per parameter tensor plus step counter."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            v_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_b=[np.zeros_like(b) for b in params.biases],
        )


def init_params(cfg: ModelConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, fully determined by seed."""
    gen = np.random.default_rng(seed)
    weights, biases = [], []
    dims = cfg.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(gen.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights, biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Clip keeps exp() finite; sigmoid is already saturated far inside +-60.
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def _forward_batch(params: ModelParams, X: np.ndarray):
    """Return (hidden activations, output logits, output probabilities)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.weights[0].shape[1]:
        raise ValueError(
            f"input dim {X.shape[1]} does not match model input {params.weights[0].shape[1]}"
        )
    activations = [X]
    a = X
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(a @ W.T + b, 0.0)
        activations.append(a)
    logits = a @ params.weights[-1].T + params.biases[-1]
    return activations, logits, _sigmoid(logits)


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a single feature vector, each strictly in (0, 1)."""
    _, _, probs = _forward_batch(params, np.asarray(x, dtype=float).reshape(1, -1))
    return probs[0]


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy over labels, probabilities clamped away from {0, 1}."""
    p = np.clip(np.asarray(probs, dtype=float), 1e-12, 1.0 - 1e-12)
    y = np.asarray(labels, dtype=float)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def _bce_from_logits(logits: np.ndarray, Y: np.ndarray) -> float:
    # softplus(z) - z*y, elementwise-stable for large |z|
    z = logits
    loss = np.maximum(z, 0.0) - z * Y + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(loss))


def backward(params: ModelParams, X: np.ndarray, Y: np.ndarray) -> tuple[ModelParams, float]:
    """Analytic gradients of the mean batch BCE, plus the batch loss."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("backward() needs a non-empty batch")
    if Y.shape != (X.shape[0], params.biases[-1].shape[0]):
        raise ValueError(f"label shape {Y.shape} does not match batch/output dims")

    activations, logits, probs = _forward_batch(params, X)
    loss = _bce_from_logits(logits, Y)

    n, n_labels = Y.shape
    grad_w = [np.empty(0)] * params.num_layers
    grad_b = [np.empty(0)] * params.num_layers

    delta = (probs - Y) / (n * n_labels)
    for layer in range(params.num_layers - 1, -1, -1):
        grad_w[layer] = delta.T @ activations[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (activations[layer] > 0.0)
    return ModelParams(grad_w, grad_b), loss


def adam_step(
    params: ModelParams, grads: ModelParams, state: AdamState, cfg: ModelConfig
) -> tuple[ModelParams, AdamState]:
    """One Adam update; returns fresh params and state, inputs untouched."""
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    t = state.t + 1
    new_w, new_b = [], []
    m_w, v_w, m_b, v_b = [], [], [], []
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for W, gW, m, v in zip(params.weights, grads.weights, state.m_w, state.v_w):
        m = b1 * m + (1.0 - b1) * gW
        v = b2 * v + (1.0 - b2) * gW**2
        new_w.append(W - lr * (m / corr1) / (np.sqrt(v / corr2) + eps))
        m_w.append(m)
        v_w.append(v)
    for b, gb, m, v in zip(params.biases, grads.biases, state.m_b, state.v_b):
        m = b1 * m + (1.0 - b1) * gb
        v = b2 * v + (1.0 - b2) * gb**2
        new_b.append(b - lr * (m / corr1) / (np.sqrt(v / corr2) + eps))
        m_b.append(m)
        v_b.append(v)
    return ModelParams(new_w, new_b), AdamState(m_w, v_w, m_b, v_b, t)


def train_local(
    params: ModelParams,
    train_ds,
    epochs: int,
    cfg: ModelConfig,
    seed: int,
) -> tuple[ModelParams, float]:
    """Seeded mini-batch Adam training; optimizer state is fresh for this call.

    Returns the updated parameters and the mean per-sample loss over the final
    epoch (NaN when epochs == 0).
    """
    X = train_ds.feature_matrix()
    Y = train_ds.label_matrix().astype(float)
    if X.shape[0] == 0:
        raise ValueError("train_local() needs a non-empty training set")
    gen = np.random.default_rng(seed)
    params = params.copy()
    state = AdamState.zeros_like(params)
    last_epoch_loss = math.nan
    n = X.shape[0]
    for _ in range(epochs):
        order = gen.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads, loss = backward(params, X[idx], Y[idx])
            params, state = adam_step(params, grads, state, cfg)
            total += loss * len(idx)
        last_epoch_loss = total / n
    return params, last_epoch_loss


def save_checkpoint(params: ModelParams, cfg: ModelConfig, path) -> None:
    """Write a versioned JSON checkpoint with row-major flattened layers."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": {
            "input_dim": cfg.input_dim,
            "hidden_dims": list(cfg.hidden_dims),
            "output_dim": cfg.output_dim,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "adam_beta1": cfg.adam_beta1,
            "adam_beta2": cfg.adam_beta2,
            "adam_eps": cfg.adam_eps,
        },
        "layers": [
            {
                "shape": list(W.shape),
                "weights": W.reshape(-1).tolist(),
                "bias": b.tolist(),
            }
            for W, b in zip(params.weights, params.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[ModelParams, ModelConfig]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {doc.get('format')!r}")
    c = doc["config"]
    cfg = ModelConfig(
        input_dim=c["input_dim"],
        hidden_dims=tuple(c["hidden_dims"]),
        output_dim=c["output_dim"],
        learning_rate=c["learning_rate"],
        batch_size=c["batch_size"],
        adam_beta1=c["adam_beta1"],
        adam_beta2=c["adam_beta2"],
        adam_eps=c["adam_eps"],
    )
    weights, biases = [], []
    for layer in doc["layers"]:
        shape = tuple(layer["shape"])
        weights.append(np.asarray(layer["weights"], dtype=float).reshape(shape))
        biases.append(np.asarray(layer["bias"], dtype=float))
    return ModelParams(weights, biases), cfg
