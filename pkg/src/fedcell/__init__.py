"""Small-cell telemetry simulation and federated fault-classifier training.

The package covers the whole experiment loop: deterministic topology and
telemetry generation with gNB fault injection, threshold-based multi-label
window encoding, a compact from-scratch MLP, centralized and FedAvg training
pipelines, and a CLI that writes CSV/JSON artifacts plus convergence figures.
"""

__version__ = "0.1.0"

from .scenario import ScenarioConfig, Topology, build_topology, load_config
from .netsim import ChannelModel, TelemetryLog, TelemetryRecord
from .encoder import Dataset, LabeledWindow, ThresholdSet
from .nn import ModelConfig, ModelParams
from .fed import FedConfig, RoundRecord
from .metrics import Metrics

__all__ = [
    "ScenarioConfig",
    "Topology",
    "build_topology",
    "load_config",
    "ChannelModel",
    "TelemetryLog",
    "TelemetryRecord",
    "Dataset",
    "LabeledWindow",
    "ThresholdSet",
    "ModelConfig",
    "ModelParams",
    "FedConfig",
    "RoundRecord",
    "Metrics",
    "__version__",
]
