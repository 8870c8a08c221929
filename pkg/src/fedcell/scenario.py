"""Experiment configuration and deterministic topology generation.

Configs are strict JSON: every field optional with a documented default, but
unknown fields are rejected so typos cannot silently change an experiment.
Topology is a pure function of the config; gNBs sit on a circle (or grid)
inside the deployment area while UEs are placed around their serving gNB,
first half near, second half far. Near/far ranges are relative to the serving
gNB and may extend past the nominal area edge, which only governs gNB sites.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import rng
from .encoder import ThresholdSet
from .fed import FedConfig
from .nn import ModelConfig

LAYOUTS = ("circular", "grid")

# Placement distances below this are clamped up so the path-loss model,
# which needs distance > 0, is always safe.
MIN_PLACEMENT_DISTANCE_M = 1e-9


class ConfigError(ValueError):
    """Malformed or invariant-violating scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment description: topology, timing, faults, seeds, training."""

    num_gnbs: int = 5
    num_users: int = 10
    duration: float = 2.0
    sample_interval: float = 0.01
    area_diameter: float = 200.0
    near_range: float = 10.0
    far_range: float = 300.0
    layout: str = "circular"
    fault_time: float = 0.5
    num_failed_gnbs: int = 1
    master_seed: int = 42
    window_len: int = 10
    train_fraction: float = 0.8
    model: ModelConfig = field(default_factory=ModelConfig)
    fed: FedConfig = field(default_factory=FedConfig)
    thresholds: ThresholdSet = field(default_factory=ThresholdSet)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.num_gnbs < 1:
            raise ConfigError(f"num_gnbs must be >= 1, got {self.num_gnbs}")
        if self.num_users < 1:
            raise ConfigError(f"num_users must be >= 1, got {self.num_users}")
        for name in ("duration", "sample_interval", "area_diameter", "near_range", "far_range"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if not 0 <= self.num_failed_gnbs <= self.num_gnbs:
            raise ConfigError(
                f"num_failed_gnbs ({self.num_failed_gnbs}) must lie in [0, num_gnbs={self.num_gnbs}]"
            )
        if not 0.0 <= self.fault_time <= self.duration:
            raise ConfigError(
                f"fault_time ({self.fault_time}) must lie in [0, duration={self.duration}]"
            )
        if self.near_range >= self.far_range:
            raise ConfigError(
                f"near_range ({self.near_range}) must be smaller than far_range ({self.far_range})"
            )
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.window_len < 2:
            raise ConfigError(f"window_len must be >= 2, got {self.window_len}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.duration / self.sample_interval < 2 * self.window_len:
            raise ConfigError(
                "duration / sample_interval must be >= 2 * window_len "
                f"({self.duration} / {self.sample_interval} < {2 * self.window_len})"
            )


@dataclass
class Topology:
    """gNB sites, UE positions, and the fixed UE-to-gNB association."""

    gnb_positions: np.ndarray  # (B, 2) meters
    user_positions: np.ndarray  # (U, 2) meters
    serving_gnb: np.ndarray  # (U,) int
    placement_class: tuple[str, ...]  # per UE: "near" or "far"

    def distance(self, ue_id: int) -> float:
        gnb = self.gnb_positions[self.serving_gnb[ue_id]]
        return float(np.hypot(*(self.user_positions[ue_id] - gnb)))


_INT_FIELDS = {"num_gnbs", "num_users", "num_failed_gnbs", "master_seed", "window_len"}
_FLOAT_FIELDS = {
    "duration",
    "sample_interval",
    "area_diameter",
    "near_range",
    "far_range",
    "fault_time",
    "train_fraction",
}


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def _coerce_number(name: str, value, want_int: bool):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {name} must be a number, got {value!r}")
    if want_int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"field {name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_model(block: dict) -> ModelConfig:
    allowed = {f.name for f in fields(ModelConfig)}
    _check_keys(block, allowed, "model")
    kwargs = dict(block)
    if "hidden_dims" in kwargs:
        dims = kwargs["hidden_dims"]
        if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
            raise ConfigError("model.hidden_dims must be a list of integers")
        kwargs["hidden_dims"] = tuple(dims)
    try:
        return ModelConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"model config: {exc}") from exc


def _parse_simple(block: dict, cls, where: str):
    _check_keys(block, {f.name for f in fields(cls)}, where)
    try:
        return cls(**block)
    except ValueError as exc:
        raise ConfigError(f"{where} config: {exc}") from exc


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    allowed = {f.name for f in fields(ScenarioConfig)}
    _check_keys(doc, allowed, "config")
    kwargs = {}
    for name, value in doc.items():
        if name in _INT_FIELDS:
            kwargs[name] = _coerce_number(name, value, want_int=True)
        elif name in _FLOAT_FIELDS:
            kwargs[name] = _coerce_number(name, value, want_int=False)
        elif name == "layout":
            if not isinstance(value, str):
                raise ConfigError(f"field layout must be a string, got {value!r}")
            kwargs[name] = value
        elif name == "model":
            kwargs[name] = _parse_model(_require_object(value, "model"))
        elif name == "fed":
            kwargs[name] = _parse_simple(_require_object(value, "fed"), FedConfig, "fed")
        elif name == "thresholds":
            kwargs[name] = _parse_simple(
                _require_object(value, "thresholds"), ThresholdSet, "thresholds"
            )
    return ScenarioConfig(**kwargs)


def _require_object(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"field {where} must be a JSON object")
    return value


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully-resolved config as a plain dict (inverse of config_from_dict)."""
    return {
        "num_gnbs": cfg.num_gnbs,
        "num_users": cfg.num_users,
        "duration": cfg.duration,
        "sample_interval": cfg.sample_interval,
        "area_diameter": cfg.area_diameter,
        "near_range": cfg.near_range,
        "far_range": cfg.far_range,
        "layout": cfg.layout,
        "fault_time": cfg.fault_time,
        "num_failed_gnbs": cfg.num_failed_gnbs,
        "master_seed": cfg.master_seed,
        "window_len": cfg.window_len,
        "train_fraction": cfg.train_fraction,
        "model": {
            "input_dim": cfg.model.input_dim,
            "hidden_dims": list(cfg.model.hidden_dims),
            "output_dim": cfg.model.output_dim,
            "learning_rate": cfg.model.learning_rate,
            "batch_size": cfg.model.batch_size,
            "adam_beta1": cfg.model.adam_beta1,
            "adam_beta2": cfg.model.adam_beta2,
            "adam_eps": cfg.model.adam_eps,
        },
        "fed": {
            "rounds": cfg.fed.rounds,
            "local_epochs": cfg.fed.local_epochs,
            "centralized_epochs": cfg.fed.centralized_epochs,
            "participation": cfg.fed.participation,
        },
        "thresholds": {
            "sinr_db_min": cfg.thresholds.sinr_db_min,
            "jitter_ms_max": cfg.thresholds.jitter_ms_max,
            "delay_ms_max": cfg.thresholds.delay_ms_max,
            "tb_bytes_min": cfg.thresholds.tb_bytes_min,
        },
    }


def _gnb_sites(cfg: ScenarioConfig) -> np.ndarray:
    radius = cfg.area_diameter / 2.0
    if cfg.layout == "circular":
        if cfg.num_gnbs == 1:
            return np.zeros((1, 2))
        angles = 2.0 * math.pi * np.arange(cfg.num_gnbs) / cfg.num_gnbs
        return radius * np.column_stack([np.cos(angles), np.sin(angles)])
    # grid: cell centers of the smallest g x g grid over the square inscribed
    # in the circular area, row-major, first B cells
    g = math.ceil(math.sqrt(cfg.num_gnbs))
    side = cfg.area_diameter / math.sqrt(2.0)
    spacing = side / g
    coords = -side / 2.0 + spacing * (np.arange(g) + 0.5)
    sites = [(coords[j], coords[i]) for i in range(g) for j in range(g)]
    return np.array(sites[: cfg.num_gnbs])


def build_topology(cfg: ScenarioConfig) -> Topology:
    """Deterministic deployment: pure function of (cfg, master_seed)."""
    gen = rng.substream(cfg.master_seed, rng.TOPOLOGY)
    gnb_positions = _gnb_sites(cfg)
    user_positions = np.empty((cfg.num_users, 2))
    serving = np.empty(cfg.num_users, dtype=int)
    classes = []
    for i in range(cfg.num_users):
        gnb = i % cfg.num_gnbs  # round-robin keeps clients balanced
        near = 2 * i < cfg.num_users
        angle = gen.uniform(0.0, 2.0 * math.pi)
        if near:
            dist = gen.uniform(0.0, cfg.near_range)
        else:
            # maps [0,1) onto (near_range, far_range]
            dist = cfg.far_range - gen.uniform(0.0, 1.0) * (cfg.far_range - cfg.near_range)
        dist = max(dist, MIN_PLACEMENT_DISTANCE_M)
        user_positions[i] = gnb_positions[gnb] + dist * np.array(
            [math.cos(angle), math.sin(angle)]
        )
        serving[i] = gnb
        classes.append("near" if near else "far")
    return Topology(gnb_positions, user_positions, serving, tuple(classes))


def preset_names() -> list[str]:
    """Names of the packaged scenario presets (S1..S6)."""
    pkg = resources.files(__package__) / "presets"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def preset_path(name: str) -> Path:
    """Filesystem path of a packaged preset config."""
    p = resources.files(__package__) / "presets" / f"{name}.json"
    if not p.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return Path(str(p))
