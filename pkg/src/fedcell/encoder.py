"""Window segmentation, feature extraction, and threshold-based labeling.

Telemetry is cut into non-overlapping fixed-length windows per UE. Each
window becomes 12 features ({mean, last value, slope} for each of the four
KPIs) plus a 4-bit label vector fired by strict threshold comparisons on the
window means of the raw KPIs. Labels always come from raw values; z-score
normalization of features happens only when matrices are materialized for
training, using scalars computed on the pooled training split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import rng

if TYPE_CHECKING:
    from .netsim import TelemetryLog, TelemetryRecord
    from .scenario import ScenarioConfig

# KPI order is a schema contract: features 0-2 sinr, 3-5 jitter, 6-8 delay,
# 9-11 tbSize; labels follow the same KPI order.
KPI_FIELDS = ("sinr_db", "jitter_ms", "delay_ms", "tb_size_bytes")
NUM_FEATURES = 3 * len(KPI_FIELDS)
NUM_LABELS = len(KPI_FIELDS)

STD_FLOOR = 1e-9


@dataclass(frozen=True)
class ThresholdSet:
    """Per-KPI failure thresholds; see label_window for firing directions."""

    sinr_db_min: float = 20.0
    jitter_ms_max: float = 0.1
    delay_ms_max: float = 0.8
    tb_bytes_min: float = 500.0

    def __post_init__(self):
        for name in ("sinr_db_min", "jitter_ms_max", "delay_ms_max", "tb_bytes_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"threshold {name} must be positive")


@dataclass
class LabeledWindow:
    gnb_id: int
    ue_id: int
    start_time: float
    features: np.ndarray  # shape (12,)
    labels: np.ndarray  # shape (4,), uint8


@dataclass
class Normalization:
    """Per-feature z-score scalars, computed from training data only."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class Dataset:
    windows: list[LabeledWindow]
    normalization: Normalization | None = None

    def __len__(self) -> int:
        return len(self.windows)

    def feature_matrix(self, normalized: bool = True) -> np.ndarray:
        X = (
            np.stack([w.features for w in self.windows])
            if self.windows
            else np.empty((0, NUM_FEATURES))
        )
        if normalized:
            if self.normalization is None:
                raise ValueError("dataset has no normalization scalars attached")
            X = self.normalization.apply(X)
        return X

    def label_matrix(self) -> np.ndarray:
        if not self.windows:
            return np.empty((0, NUM_LABELS), dtype=np.uint8)
        return np.stack([w.labels for w in self.windows])


def make_windows(log: "TelemetryLog", window_len: int) -> list[list["TelemetryRecord"]]:
    """Per-UE consecutive chunks of window_len records; remainders are dropped."""
    if window_len < 2:
        raise ValueError("window_len must be >= 2")
    per_ue: dict[int, list] = {}
    for rec in log.records:  # records are (time, ue_id)-sorted
        per_ue.setdefault(rec.ue_id, []).append(rec)
    windows = []
    for ue_id in sorted(per_ue):
        series = per_ue[ue_id]
        for start in range(0, len(series) - window_len + 1, window_len):
            windows.append(series[start : start + window_len])
    return windows


def extract_features(window: list["TelemetryRecord"]) -> np.ndarray:
    """{mean, last, slope} per KPI; slope in KPI units per second."""
    if len(window) < 2:
        raise ValueError("feature extraction needs at least 2 records")
    span = window[-1].time - window[0].time
    feats = np.empty(NUM_FEATURES)
    for k, name in enumerate(KPI_FIELDS):
        values = [getattr(r, name) for r in window]
        feats[3 * k] = sum(values) / len(values)
        feats[3 * k + 1] = values[-1]
        feats[3 * k + 2] = (values[-1] - values[0]) / span
    return feats


def label_window(window: list["TelemetryRecord"], thresholds: ThresholdSet) -> np.ndarray:
    """4-bit fault vector from window means; comparisons strict, boundaries do not fire."""
    if not window:
        raise ValueError("cannot label an empty window")
    n = len(window)
    mean_sinr = sum(r.sinr_db for r in window) / n
    mean_jitter = sum(r.jitter_ms for r in window) / n
    mean_delay = sum(r.delay_ms for r in window) / n
    mean_tb = sum(r.tb_size_bytes for r in window) / n
    return np.array(
        [
            mean_sinr < thresholds.sinr_db_min,
            mean_jitter > thresholds.jitter_ms_max,
            mean_delay > thresholds.delay_ms_max,
            mean_tb < thresholds.tb_bytes_min,
        ],
        dtype=np.uint8,
    )


def encode_log(log: "TelemetryLog", cfg: "ScenarioConfig") -> list[LabeledWindow]:
    """Segment, featurize, and label a telemetry log."""
    out = []
    for window in make_windows(log, cfg.window_len):
        first = window[0]
        out.append(
            LabeledWindow(
                gnb_id=first.gnb_id,
                ue_id=first.ue_id,
                start_time=first.time,
                features=extract_features(window),
                labels=label_window(window, cfg.thresholds),
            )
        )
    return out


def _split_indices(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.ceil(train_fraction * n))
    return order[:n_train], order[n_train:]


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle; first ceil(fraction * N) windows train, rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if len(ds) == 0:
        raise ValueError("cannot split an empty dataset")
    train_idx, test_idx = _split_indices(len(ds), train_fraction, seed)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise ValueError(
            f"split of {len(ds)} windows at fraction {train_fraction} leaves an empty side"
        )
    train = Dataset([ds.windows[i] for i in train_idx], ds.normalization)
    test = Dataset([ds.windows[i] for i in test_idx], ds.normalization)
    return train, test


def build_datasets(
    log: "TelemetryLog", cfg: "ScenarioConfig"
) -> tuple[dict[int, Dataset], Dataset]:
    """Group labeled windows by serving gNB and attach shared normalization.

    Normalization scalars are computed on the pooled training split (the union
    of every client's seeded training partition) and shared by all datasets so
    both pipelines see the same input scale.
    """
    windows = encode_log(log, cfg)
    grouped: dict[int, list[LabeledWindow]] = {g: [] for g in range(cfg.num_gnbs)}
    for w in windows:
        grouped[w.gnb_id].append(w)
    for gnb_id, ws in grouped.items():
        if not ws:
            raise ValueError(f"gNB {gnb_id} has zero telemetry windows (degenerate client)")

    train_rows = []
    for gnb_id in sorted(grouped):
        ws = grouped[gnb_id]
        train_idx, _ = _split_indices(
            len(ws), cfg.train_fraction, rng.subseed(cfg.master_seed, rng.SPLIT, gnb_id)
        )
        train_rows.extend(ws[i].features for i in train_idx)
    train_X = np.stack(train_rows)
    norm = Normalization(
        mean=train_X.mean(axis=0),
        std=np.maximum(train_X.std(axis=0), STD_FLOOR),
    )

    per_gnb = {g: Dataset(grouped[g], norm) for g in sorted(grouped)}
    pooled = Dataset([w for g in sorted(grouped) for w in grouped[g]], norm)
    return per_gnb, pooled


def build_splits(
    per_gnb: dict[int, Dataset], cfg: "ScenarioConfig"
) -> tuple[dict[int, Dataset], dict[int, Dataset], Dataset, Dataset]:
    """Per-client train/test partitions plus their pooled concatenations.

    Uses the same per-gNB seeds as build_datasets, so the pooled training set
    here is exactly the one the normalization scalars were computed from.
    """
    client_train: dict[int, Dataset] = {}
    client_test: dict[int, Dataset] = {}
    for gnb_id in sorted(per_gnb):
        ds = per_gnb[gnb_id]
        seed = rng.subseed(cfg.master_seed, rng.SPLIT, gnb_id)
        client_train[gnb_id], client_test[gnb_id] = split(ds, cfg.train_fraction, seed)
    norm = next(iter(per_gnb.values())).normalization
    pooled_train = Dataset(
        [w for g in sorted(client_train) for w in client_train[g].windows], norm
    )
    pooled_test = Dataset([w for g in sorted(client_test) for w in client_test[g].windows], norm)
    return client_train, client_test, pooled_train, pooled_test


DATASET_CSV_HEADER = (
    "gnb_id,ue_id,start_time,"
    + ",".join(f"f{i}" for i in range(NUM_FEATURES))
    + ","
    + ",".join(f"y{i}" for i in range(NUM_LABELS))
)


def export_dataset_csv(windows: list[LabeledWindow], path) -> None:
    """Write labeled windows (raw, unnormalized features) as CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DATASET_CSV_HEADER + "\n")
        for w in windows:
            feats = ",".join(f"{v:.6f}" for v in w.features)
            labels = ",".join(str(int(v)) for v in w.labels)
            fh.write(f"{w.gnb_id},{w.ue_id},{w.start_time:.6f},{feats},{labels}\n")
