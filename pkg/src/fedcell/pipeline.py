"""End-to-end orchestration: simulate, encode, train, compare, sweep.

Each command is a pure function of (config, seed) to output bytes, with two
exceptions confined to the manifest: the created_utc timestamp and measured
wall-clock timings. Every command writes a manifest.json naming its artifacts
and the config hash so runs can be audited and reproduced.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, fed, figures, metrics, netsim, rng
from .encoder import Dataset, build_datasets, build_splits, export_dataset_csv
from .nn import init_params, save_checkpoint
from .scenario import ScenarioConfig, config_to_dict, load_config, preset_names, preset_path

SWEEP_CSV_HEADER = (
    "scenario,mode,exact_match,mean_loss,"
    "prec_sinr,prec_jitter,prec_delay,prec_tbsize,num_test_windows"
)


def config_hash(cfg: ScenarioConfig) -> str:
    """Platform-stable digest of the fully-resolved config."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _ensure_dir(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(
    out: Path,
    scenario_name: str,
    cfg: ScenarioConfig,
    artifacts: dict[str, Path],
    timings: dict[str, float],
) -> Path:
    doc = {
        "scenario": scenario_name,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "artifacts": {name: p.name for name, p in sorted(artifacts.items())},
        "timings_secs": {name: round(s, 6) for name, s in sorted(timings.items())},
    }
    path = out / "manifest.json"
    _write_json(doc, path)
    return path


@dataclasses.dataclass
class PreparedData:
    """Everything both training pipelines consume, built once per run."""

    log: netsim.TelemetryLog
    pooled: Dataset
    client_train: dict[int, Dataset]
    client_test: dict[int, Dataset]
    pooled_train: Dataset
    pooled_test: Dataset


def prepare_data(cfg: ScenarioConfig, channel: netsim.ChannelModel | None = None) -> PreparedData:
    """Simulate telemetry and build identical datasets/splits for both modes."""
    log = netsim.run(cfg, channel)
    per_gnb, pooled = build_datasets(log, cfg)
    client_train, client_test, pooled_train, pooled_test = build_splits(per_gnb, cfg)
    return PreparedData(log, pooled, client_train, client_test, pooled_train, pooled_test)


def cmd_simulate(cfg: ScenarioConfig, out_dir, scenario_name: str = "custom") -> dict[str, Path]:
    out = _ensure_dir(out_dir)
    started = time.perf_counter()
    log = netsim.run(cfg)
    sim_secs = time.perf_counter() - started
    paths = {"telemetry": out / "telemetry.csv", "faults": out / "faults.json"}
    netsim.export_csv(log, paths["telemetry"])
    netsim.export_fault_json(log, paths["faults"])
    write_manifest(out, scenario_name, cfg, paths, {"simulate": sim_secs})
    return paths


def cmd_encode(cfg: ScenarioConfig, out_dir, scenario_name: str = "custom") -> dict[str, Path]:
    out = _ensure_dir(out_dir)
    started = time.perf_counter()
    log = netsim.run(cfg)
    _, pooled = build_datasets(log, cfg)
    encode_secs = time.perf_counter() - started
    paths = {"dataset": out / "dataset.csv"}
    export_dataset_csv(pooled.windows, paths["dataset"])
    write_manifest(out, scenario_name, cfg, paths, {"encode": encode_secs})
    return paths


def cmd_train_central(
    cfg: ScenarioConfig,
    out_dir,
    scenario_name: str = "custom",
    dump_predictions: bool = False,
) -> dict:
    out = _ensure_dir(out_dir)
    started = time.perf_counter()
    data = prepare_data(cfg)
    params, m = fed.run_centralized(
        data.pooled_train, data.pooled_test, cfg.model, cfg.fed, cfg.master_seed
    )
    train_secs = time.perf_counter() - started
    paths = {
        "model": out / "model_centralized.json",
        "report": out / "report_centralized.json",
    }
    save_checkpoint(params, cfg.model, paths["model"])
    report = {
        "scenario": scenario_name,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "mode": "centralized",
        **metrics.report_block(m),
    }
    _write_json(report, paths["report"])
    if dump_predictions:
        paths["predictions"] = out / "predictions_centralized.csv"
        metrics.dump_predictions_csv(params, data.pooled_test, paths["predictions"])
    write_manifest(out, scenario_name, cfg, paths, {"train_centralized": train_secs})
    return {"params": params, "metrics": m, "paths": paths}


def cmd_train_fed(
    cfg: ScenarioConfig,
    out_dir,
    scenario_name: str = "custom",
    dump_predictions: bool = False,
) -> dict:
    out = _ensure_dir(out_dir)
    started = time.perf_counter()
    data = prepare_data(cfg)
    params, history = fed.run_federated(
        data.client_train, data.client_test, cfg.model, cfg.fed, cfg.master_seed
    )
    m = metrics.evaluate(params, data.pooled_test)
    train_secs = time.perf_counter() - started
    paths = {
        "model": out / "model_federated.json",
        "report": out / "report_federated.json",
        "convergence": out / "convergence.csv",
    }
    save_checkpoint(params, cfg.model, paths["model"])
    fed.write_history_csv(history, paths["convergence"])
    report = {
        "scenario": scenario_name,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "mode": "federated",
        **metrics.report_block(m),
    }
    _write_json(report, paths["report"])
    if dump_predictions:
        paths["predictions"] = out / "predictions_federated.csv"
        metrics.dump_predictions_csv(params, data.pooled_test, paths["predictions"])
    write_manifest(out, scenario_name, cfg, paths, {"train_federated": train_secs})
    return {"params": params, "metrics": m, "history": history, "paths": paths}


def cmd_compare(
    cfg: ScenarioConfig,
    out_dir,
    scenario_name: str = "custom",
    dump_predictions: bool = False,
) -> dict:
    """Run both pipelines on identical data, splits, and initial parameters."""
    out = _ensure_dir(out_dir)
    timings: dict[str, float] = {}

    started = time.perf_counter()
    data = prepare_data(cfg)
    timings["prepare_data"] = time.perf_counter() - started

    init = init_params(cfg.model, rng.subseed(cfg.master_seed, rng.MODEL_INIT))

    started = time.perf_counter()
    params_c, m_c = fed.run_centralized(
        data.pooled_train, data.pooled_test, cfg.model, cfg.fed, cfg.master_seed, init=init
    )
    timings["train_centralized"] = time.perf_counter() - started

    started = time.perf_counter()
    params_f, history = fed.run_federated(
        data.client_train, data.client_test, cfg.model, cfg.fed, cfg.master_seed, init=init
    )
    timings["train_federated"] = time.perf_counter() - started
    m_f = metrics.evaluate(params_f, data.pooled_test)

    paths = {
        "telemetry": out / "telemetry.csv",
        "faults": out / "faults.json",
        "model_centralized": out / "model_centralized.json",
        "model_federated": out / "model_federated.json",
        "convergence_csv": out / "convergence.csv",
        "convergence_svg": out / "convergence.svg",
        "report": out / "report.json",
    }
    netsim.export_csv(data.log, paths["telemetry"])
    netsim.export_fault_json(data.log, paths["faults"])
    save_checkpoint(params_c, cfg.model, paths["model_centralized"])
    save_checkpoint(params_f, cfg.model, paths["model_federated"])
    fed.write_history_csv(history, paths["convergence_csv"])
    figures.convergence_chart(history, m_c.exact_match, paths["convergence_svg"])
    report = {
        "scenario": scenario_name,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "centralized": metrics.report_block(m_c),
        "federated": metrics.report_block(m_f),
        "exact_match_gap": m_c.exact_match - m_f.exact_match,
    }
    _write_json(report, paths["report"])
    if dump_predictions:
        paths["predictions_centralized"] = out / "predictions_centralized.csv"
        paths["predictions_federated"] = out / "predictions_federated.csv"
        metrics.dump_predictions_csv(params_c, data.pooled_test, paths["predictions_centralized"])
        metrics.dump_predictions_csv(params_f, data.pooled_test, paths["predictions_federated"])
    write_manifest(out, scenario_name, cfg, paths, timings)
    return {
        "centralized": m_c,
        "federated": m_f,
        "history": history,
        "report": report,
        "paths": paths,
    }


def _sweep_row(scenario: str, mode: str, m: metrics.Metrics) -> dict:
    return {
        "scenario": scenario,
        "mode": mode,
        "exact_match": m.exact_match,
        "mean_loss": m.mean_loss,
        "num_windows": m.num_windows,
        "precision": {name: m.precision[j] for j, name in enumerate(metrics.LABEL_NAMES)},
    }


def write_sweep_csv(rows: list[dict], path: Path) -> None:
    def fmt(value: float | None) -> str:
        return "nan" if value is None else f"{value:.6f}"

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for r in rows:
            cols = [
                r["scenario"],
                r["mode"],
                f"{r['exact_match']:.6f}",
                f"{r['mean_loss']:.6f}",
                *(fmt(r["precision"][name]) for name in metrics.LABEL_NAMES),
                str(r["num_windows"]),
            ]
            fh.write(",".join(cols) + "\n")


def cmd_sweep(out_dir, seed_override: int | None = None, dump_predictions: bool = False) -> dict:
    """Run compare for every packaged preset and aggregate the results."""
    out = _ensure_dir(out_dir)
    rows: list[dict] = []
    scenario_hashes: dict[str, str] = {}
    started = time.perf_counter()
    for name in preset_names():
        cfg = load_config(preset_path(name))
        if seed_override is not None:
            cfg = dataclasses.replace(cfg, master_seed=seed_override)
        res = cmd_compare(cfg, out / name, scenario_name=name, dump_predictions=dump_predictions)
        scenario_hashes[name] = config_hash(cfg)
        rows.append(_sweep_row(name, "centralized", res["centralized"]))
        rows.append(_sweep_row(name, "federated", res["federated"]))
    sweep_secs = time.perf_counter() - started

    paths = {
        "summary": out / "summary.csv",
        "accuracy_chart": out / "sweep_accuracy.svg",
        "precision_chart": out / "sweep_precision.svg",
    }
    write_sweep_csv(rows, paths["summary"])
    figures.accuracy_bars(rows, paths["accuracy_chart"])
    figures.precision_bars(rows, paths["precision_chart"])
    manifest = {
        "scenario": "sweep",
        "scenarios": scenario_hashes,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "artifacts": {name: p.name for name, p in sorted(paths.items())},
        "timings_secs": {"sweep": round(sweep_secs, 6)},
    }
    _write_json(manifest, out / "manifest.json")
    return {"rows": rows, "paths": paths}
