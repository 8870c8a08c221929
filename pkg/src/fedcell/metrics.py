"""Model evaluation: exact-match accuracy and per-label precision.

Predictions use an inclusive 0.5 cutoff on the sigmoid outputs. Precision for
a label with zero positive predictions is undefined and reported as None
(null in JSON, nan in CSV), never coerced to 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import NUM_LABELS, Dataset
from .nn import ModelParams, _forward_batch, bce_loss

LABEL_NAMES = ("sinr", "jitter", "delay", "tbsize")

PREDICTION_CSV_HEADER = (
    "gnb_id,ue_id,start_time,"
    + ",".join(f"y_{n}" for n in LABEL_NAMES)
    + ","
    + ",".join(f"prob_{n}" for n in LABEL_NAMES)
    + ","
    + ",".join(f"pred_{n}" for n in LABEL_NAMES)
)


@dataclass
class Metrics:
    """Evaluation summary over one test set."""

    exact_match: float
    precision: tuple[float | None, float | None, float | None, float | None]
    counts: tuple[tuple[int, int, int, int], ...]  # per label: (tp, fp, fn, tn)
    mean_loss: float
    num_windows: int


def predict_batch(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """Binary predictions for a batch of normalized feature rows."""
    _, _, probs = _forward_batch(params, X)
    return (probs >= 0.5).astype(np.uint8)


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Binary prediction vector for one normalized feature vector."""
    return predict_batch(params, np.asarray(features, dtype=float).reshape(1, -1))[0]


def metrics_from_arrays(
    labels: np.ndarray, preds: np.ndarray, probs: np.ndarray | None = None
) -> Metrics:
    """Count-based metrics from aligned (N, 4) label and prediction arrays."""
    labels = np.asarray(labels, dtype=np.uint8)
    preds = np.asarray(preds, dtype=np.uint8)
    if labels.shape != preds.shape or labels.ndim != 2 or labels.shape[1] != NUM_LABELS:
        raise ValueError(f"labels/predictions must both be (N, {NUM_LABELS}) arrays")
    n = labels.shape[0]
    if n == 0:
        raise ValueError("cannot compute metrics over an empty test set")
    exact = float(np.mean(np.all(labels == preds, axis=1)))
    counts = []
    precision = []
    for j in range(NUM_LABELS):
        y, p = labels[:, j], preds[:, j]
        tp = int(np.sum((y == 1) & (p == 1)))
        fp = int(np.sum((y == 0) & (p == 1)))
        fn = int(np.sum((y == 1) & (p == 0)))
        tn = int(np.sum((y == 0) & (p == 0)))
        counts.append((tp, fp, fn, tn))
        precision.append(tp / (tp + fp) if tp + fp > 0 else None)
    loss = float("nan") if probs is None else bce_loss(probs, labels.astype(float))
    return Metrics(exact, tuple(precision), tuple(counts), loss, n)


def evaluate(params: ModelParams, test: Dataset) -> Metrics:
    """Evaluate a model on a dataset's normalized features."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    X = test.feature_matrix()
    Y = test.label_matrix()
    _, _, probs = _forward_batch(params, X)
    return metrics_from_arrays(Y, (probs >= 0.5).astype(np.uint8), probs)


def report_block(m: Metrics) -> dict:
    """JSON-friendly view of one Metrics value."""
    return {
        "exact_match": m.exact_match,
        "mean_loss": m.mean_loss,
        "num_windows": m.num_windows,
        "precision": {name: m.precision[j] for j, name in enumerate(LABEL_NAMES)},
        "counts": {
            name: {"tp": c[0], "fp": c[1], "fn": c[2], "tn": c[3]}
            for name, c in zip(LABEL_NAMES, m.counts)
        },
    }


def dump_predictions_csv(params: ModelParams, test: Dataset, path) -> None:
    """Per-window labels, probabilities, and binary predictions as CSV."""
    X = test.feature_matrix()
    _, _, probs = _forward_batch(params, X)
    preds = (probs >= 0.5).astype(np.uint8)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PREDICTION_CSV_HEADER + "\n")
        for i, w in enumerate(test.windows):
            cols = [
                str(w.gnb_id),
                str(w.ue_id),
                f"{w.start_time:.6f}",
                *(str(int(v)) for v in w.labels),
                *(f"{p:.6f}" for p in probs[i]),
                *(str(int(v)) for v in preds[i]),
            ]
            fh.write(",".join(cols) + "\n")
