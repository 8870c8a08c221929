"""Dual training pipelines: centralized on pooled data, federated via FedAvg.

The server side of the federated loop consumes only (params, num_samples)
from each client, never feature or label arrays. Rounds are 1-indexed; every
round broadcasts the global model, trains each selected client locally, then
aggregates with sample-count weights n_k / sum(n). Aggregation iterates the
updates in ascending client_id order with pairwise summation, so the result
is independent of the order updates arrive in.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import metrics, rng
from .encoder import Dataset
from .nn import ModelConfig, ModelParams, init_params, train_local


@dataclass(frozen=True)
class FedConfig:
    """Round/epoch budget for both pipelines."""

    rounds: int = 50
    local_epochs: int = 10
    centralized_epochs: int = 10
    participation: float = 1.0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.local_epochs < 1:
            raise ValueError(f"local_epochs must be >= 1, got {self.local_epochs}")
        if self.centralized_epochs < 0:
            raise ValueError(f"centralized_epochs must be >= 0, got {self.centralized_epochs}")
        if not 0.0 < self.participation <= 1.0:
            raise ValueError(f"participation must lie in (0, 1], got {self.participation}")


@dataclass
class ClientUpdate:
    """What a client hands the aggregator: parameters and its sample count."""

    client_id: int
    params: ModelParams
    num_samples: int
    train_loss: float = math.nan


@dataclass
class RoundRecord:
    """Global-model evaluation after one communication round."""

    round_idx: int
    test_loss: float
    exact_match: float
    precision: tuple[float | None, float | None, float | None, float | None]
    secs: float


def _pairwise_sum(arrays: list[np.ndarray]) -> np.ndarray:
    if len(arrays) == 1:
        return arrays[0]
    mid = len(arrays) // 2
    return _pairwise_sum(arrays[:mid]) + _pairwise_sum(arrays[mid:])


def fedavg(updates: list[ClientUpdate]) -> ModelParams:
    """Sample-count-weighted average of client parameters.

    Weights are n_k / sum(n). The sum runs over clients in ascending
    client_id order using pairwise summation, making the aggregate invariant
    to the order the updates are supplied in.
    """
    if not updates:
        raise ValueError("fedavg() needs at least one client update")
    ordered = sorted(updates, key=lambda u: u.client_id)
    ids = [u.client_id for u in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate client ids in update set: {ids}")
    ref_shapes = ordered[0].params.shapes()
    for u in ordered:
        if u.num_samples < 1:
            raise ValueError(f"client {u.client_id} reports num_samples < 1")
        if u.params.shapes() != ref_shapes:
            raise ValueError(f"client {u.client_id} parameter shapes do not match the global model")
    total = float(sum(u.num_samples for u in ordered))
    weights = [u.num_samples / total for u in ordered]
    new_w = [
        _pairwise_sum([w * u.params.weights[layer] for w, u in zip(weights, ordered)])
        for layer in range(len(ref_shapes))
    ]
    new_b = [
        _pairwise_sum([w * u.params.biases[layer] for w, u in zip(weights, ordered)])
        for layer in range(len(ref_shapes))
    ]
    return ModelParams(new_w, new_b)


def client_seed(master_seed: int, round_idx: int, client_id: int) -> int:
    """Shuffle seed for one client's local training in one round."""
    return rng.subseed(master_seed, rng.CLIENT_TRAIN, round_idx, client_id)


def _select_clients(client_ids: list[int], fed_cfg: FedConfig, master_seed: int, round_idx: int):
    if fed_cfg.participation >= 1.0:
        return list(client_ids)
    count = max(1, math.floor(fed_cfg.participation * len(client_ids)))
    gen = rng.substream(master_seed, rng.CLIENT_PICK, round_idx)
    picked = gen.choice(np.asarray(client_ids), size=count, replace=False)
    return sorted(int(c) for c in picked)


def run_round(
    global_params: ModelParams,
    client_train: dict[int, Dataset],
    model_cfg: ModelConfig,
    fed_cfg: FedConfig,
    master_seed: int,
    round_idx: int,
) -> tuple[ModelParams, list[ClientUpdate]]:
    """One communication round: broadcast, local training, aggregation."""
    selected = _select_clients(sorted(client_train), fed_cfg, master_seed, round_idx)
    updates = []
    for cid in selected:
        ds = client_train[cid]
        params, loss = train_local(
            global_params,
            ds,
            fed_cfg.local_epochs,
            model_cfg,
            client_seed(master_seed, round_idx, cid),
        )
        updates.append(ClientUpdate(cid, params, len(ds.windows), loss))
    return fedavg(updates), updates


def pool_datasets(parts: dict[int, Dataset]) -> Dataset:
    """Concatenate per-client datasets in ascending client_id order."""
    if not parts:
        raise ValueError("cannot pool an empty dataset collection")
    norm = next(iter(parts.values())).normalization
    return Dataset([w for cid in sorted(parts) for w in parts[cid].windows], norm)


def run_federated(
    client_train: dict[int, Dataset],
    client_test: dict[int, Dataset],
    model_cfg: ModelConfig,
    fed_cfg: FedConfig,
    master_seed: int,
    init: ModelParams | None = None,
) -> tuple[ModelParams, list[RoundRecord]]:
    """Full federated run; evaluates the global model on pooled test data
    after every round."""
    if set(client_train) != set(client_test):
        raise ValueError("client_train and client_test must cover the same client ids")
    global_params = (
        init.copy() if init is not None else init_params(model_cfg, rng.subseed(master_seed, rng.MODEL_INIT))
    )
    pooled_test = pool_datasets(client_test)
    history = []
    for round_idx in range(1, fed_cfg.rounds + 1):
        started = time.perf_counter()
        global_params, _ = run_round(
            global_params, client_train, model_cfg, fed_cfg, master_seed, round_idx
        )
        m = metrics.evaluate(global_params, pooled_test)
        history.append(
            RoundRecord(
                round_idx=round_idx,
                test_loss=m.mean_loss,
                exact_match=m.exact_match,
                precision=m.precision,
                secs=time.perf_counter() - started,
            )
        )
    return global_params, history


def run_centralized(
    pooled_train: Dataset,
    pooled_test: Dataset,
    model_cfg: ModelConfig,
    fed_cfg: FedConfig,
    master_seed: int,
    init: ModelParams | None = None,
) -> tuple[ModelParams, "metrics.Metrics"]:
    """Train one model on the pooled data, evaluate on the pooled test split."""
    params = (
        init.copy() if init is not None else init_params(model_cfg, rng.subseed(master_seed, rng.MODEL_INIT))
    )
    if fed_cfg.centralized_epochs > 0:
        params, _ = train_local(
            params,
            pooled_train,
            fed_cfg.centralized_epochs,
            model_cfg,
            rng.subseed(master_seed, rng.CENTRAL_TRAIN),
        )
    return params, metrics.evaluate(params, pooled_test)


HISTORY_CSV_HEADER = "round,test_loss,exact_match,prec_sinr,prec_jitter,prec_delay,prec_tbsize,secs"


def _fmt(value: float | None) -> str:
    return "nan" if value is None else f"{value:.6f}"


def write_history_csv(history: list[RoundRecord], path, include_timing: bool = False) -> None:
    """Write per-round metrics as CSV.

    By default the secs column is zeroed so reruns produce byte-identical
    files; pass include_timing=True to keep measured wall-clock durations.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HISTORY_CSV_HEADER + "\n")
        for rec in history:
            secs = rec.secs if include_timing else 0.0
            cols = [
                str(rec.round_idx),
                f"{rec.test_loss:.6f}",
                f"{rec.exact_match:.6f}",
                *(_fmt(p) for p in rec.precision),
                f"{secs:.6f}",
            ]
            fh.write(",".join(cols) + "\n")
