"""Synthetic per-UE telemetry under normal and fault-injected conditions.

The channel is a log-distance path-loss model with Gaussian shadowing; delay
grows linearly with distance plus folded Gaussian noise; jitter is the
absolute successive delay difference; transport block size follows a
Shannon-shaped monotone map of SINR saturating at the reference SINR.

UEs attached to a failed gNB stay attached and emit a degraded KPI regime
from the fault time onward: SINR collapses to a low mean, delay oscillates
around fault_delay_ms with a +/- fault_jitter_ms/2 dither (so the usual
jitter identity still yields fault_jitter_ms jumps), and tbSize pins to a
floor value. All sampling is driven by one seeded stream in (time, ue) order,
so a run is a pure function of the scenario config.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import rng
from .scenario import ScenarioConfig, Topology, build_topology

TELEMETRY_CSV_HEADER = "time,ue_id,gnb_id,sinr_db,jitter_ms,delay_ms,tb_size_bytes"


@dataclass(frozen=True)
class ChannelModel:
    """Parametric stand-in for a full network-stack simulation."""

    ref_sinr_db: float = 50.0
    ref_distance_m: float = 10.0
    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 2.0
    base_delay_ms: float = 0.3
    delay_distance_coeff: float = 0.0015
    delay_noise_sigma_ms: float = 0.05
    tb_max_bytes: float = 1500.0
    fault_sinr_db: float = -5.0
    fault_delay_ms: float = 2.0
    fault_jitter_ms: float = 0.5
    fault_tb_bytes: float = 50.0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError(f"path_loss_exponent must be positive, got {self.path_loss_exponent}")
        if self.ref_distance_m <= 0:
            raise ValueError(f"ref_distance_m must be positive, got {self.ref_distance_m}")
        if self.shadowing_sigma_db < 0 or self.delay_noise_sigma_ms < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.tb_max_bytes <= 0:
            raise ValueError(f"tb_max_bytes must be positive, got {self.tb_max_bytes}")
        if self.base_delay_ms <= 0:
            raise ValueError(f"base_delay_ms must be positive, got {self.base_delay_ms}")
        if self.fault_jitter_ms < 0 or self.fault_tb_bytes < 0:
            raise ValueError("fault_jitter_ms and fault_tb_bytes must be >= 0")
        # keeps fault-regime delay positive through the dither
        if self.fault_delay_ms <= self.fault_jitter_ms / 2.0:
            raise ValueError("fault_delay_ms must exceed fault_jitter_ms / 2")

    def noiseless(self) -> "ChannelModel":
        return replace(self, shadowing_sigma_db=0.0, delay_noise_sigma_ms=0.0)


@dataclass
class TelemetryRecord:
    """One KPI sample for one UE."""

    time: float
    ue_id: int
    gnb_id: int
    sinr_db: float
    jitter_ms: float
    delay_ms: float
    tb_size_bytes: float


@dataclass
class TelemetryLog:
    """Run output: records sorted by (time, ue_id), plus fault metadata."""

    records: list[TelemetryRecord]
    failed_gnbs: frozenset[int]
    fault_time: float


def sinr_at(distance_m: float, model: ChannelModel, shadow_db: float = 0.0) -> float:
    """Log-distance path loss; the caller supplies the shadowing draw."""
    if distance_m <= 0:
        raise ValueError(f"distance_m must be positive, got {distance_m}")
    spread = 10.0 * model.path_loss_exponent * math.log10(distance_m / model.ref_distance_m)
    return model.ref_sinr_db - spread + shadow_db


def tb_size_for_sinr(sinr_db: float, model: ChannelModel) -> float:
    """Shannon-shaped monotone map, saturating at the reference SINR."""
    cap = math.log2(1.0 + 10.0 ** (model.ref_sinr_db / 10.0))
    ratio = math.log2(1.0 + 10.0 ** (sinr_db / 10.0)) / cap
    return model.tb_max_bytes * min(max(ratio, 0.0), 1.0)


def sample_kpis(
    ue: int,
    topo: Topology,
    model: ChannelModel,
    t: float,
    prev_delay_ms: float | None,
    gen: np.random.Generator,
) -> TelemetryRecord:
    """Healthy-regime KPI sample for one UE at time t."""
    distance = topo.distance(ue)
    sinr = sinr_at(distance, model, gen.normal(0.0, model.shadowing_sigma_db))
    delay = (
        model.base_delay_ms
        + model.delay_distance_coeff * distance
        + abs(gen.normal(0.0, model.delay_noise_sigma_ms))
    )
    jitter = 0.0 if prev_delay_ms is None else abs(delay - prev_delay_ms)
    return TelemetryRecord(
        t, ue, int(topo.serving_gnb[ue]), sinr, jitter, delay, tb_size_for_sinr(sinr, model)
    )


def _sample_fault_kpis(
    ue: int,
    topo: Topology,
    model: ChannelModel,
    t: float,
    prev_delay_ms: float | None,
    step: int,
    gen: np.random.Generator,
) -> TelemetryRecord:
    sinr = gen.normal(model.fault_sinr_db, model.shadowing_sigma_db)
    dither = model.fault_jitter_ms / 2.0 if step % 2 == 0 else -model.fault_jitter_ms / 2.0
    delay = model.fault_delay_ms + dither + abs(gen.normal(0.0, model.delay_noise_sigma_ms))
    jitter = 0.0 if prev_delay_ms is None else abs(delay - prev_delay_ms)
    return TelemetryRecord(
        t, ue, int(topo.serving_gnb[ue]), sinr, jitter, delay, model.fault_tb_bytes
    )


def inject_faults(cfg: ScenarioConfig) -> tuple[int, ...]:
    """Seeded uniform choice of which gNBs fail at fault_time."""
    if cfg.num_failed_gnbs == 0:
        return ()
    gen = rng.substream(cfg.master_seed, rng.FAULT_PICK)
    picked = gen.choice(cfg.num_gnbs, size=cfg.num_failed_gnbs, replace=False)
    return tuple(sorted(int(g) for g in picked))


def run(cfg: ScenarioConfig, channel: ChannelModel | None = None) -> TelemetryLog:
    """Generate the full telemetry log for one scenario."""
    model = channel if channel is not None else ChannelModel()
    topo = build_topology(cfg)
    failed = frozenset(inject_faults(cfg))
    gen = rng.substream(cfg.master_seed, rng.TELEMETRY)
    # guard against float truncation on exact multiples of the interval
    steps = int(math.floor(cfg.duration / cfg.sample_interval + 1e-9)) + 1
    records: list[TelemetryRecord] = []
    prev_delay: list[float | None] = [None] * cfg.num_users
    for k in range(steps):
        t = k * cfg.sample_interval
        for ue in range(cfg.num_users):
            in_fault = int(topo.serving_gnb[ue]) in failed and t >= cfg.fault_time
            if in_fault:
                rec = _sample_fault_kpis(ue, topo, model, t, prev_delay[ue], k, gen)
            else:
                rec = sample_kpis(ue, topo, model, t, prev_delay[ue], gen)
            prev_delay[ue] = rec.delay_ms
            records.append(rec)
    return TelemetryLog(records, failed, cfg.fault_time)


def export_csv(log: TelemetryLog, path) -> None:
    """Write records in log order; reals carry six decimal places."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TELEMETRY_CSV_HEADER + "\n")
        for r in log.records:
            fh.write(
                f"{r.time:.6f},{r.ue_id},{r.gnb_id},{r.sinr_db:.6f},"
                f"{r.jitter_ms:.6f},{r.delay_ms:.6f},{r.tb_size_bytes:.6f}\n"
            )


def export_fault_json(log: TelemetryLog, path) -> None:
    """Sidecar with the fault time and the sorted failed gNB ids."""
    doc = {"fault_time": log.fault_time, "failed_gnbs": sorted(log.failed_gnbs)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_csv(path, fault_time: float = math.nan, failed_gnbs=()) -> TelemetryLog:
    """Load a telemetry CSV; fault metadata comes from the sidecar if needed."""
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TELEMETRY_CSV_HEADER.split(","):
            raise ValueError(f"unexpected telemetry header in {path}: {reader.fieldnames}")
        for row in reader:
            records.append(
                TelemetryRecord(
                    time=float(row["time"]),
                    ue_id=int(row["ue_id"]),
                    gnb_id=int(row["gnb_id"]),
                    sinr_db=float(row["sinr_db"]),
                    jitter_ms=float(row["jitter_ms"]),
                    delay_ms=float(row["delay_ms"]),
                    tb_size_bytes=float(row["tb_size_bytes"]),
                )
            )
    return TelemetryLog(records, frozenset(failed_gnbs), fault_time)


def read_fault_json(path) -> tuple[float, frozenset[int]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return float(doc["fault_time"]), frozenset(int(g) for g in doc["failed_gnbs"])
