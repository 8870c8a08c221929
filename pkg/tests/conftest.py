import json

import pytest

from fedcell.fed import FedConfig
from fedcell.scenario import ScenarioConfig


@pytest.fixture
def tiny_cfg() -> ScenarioConfig:
    """Small scenario that exercises every stage in well under a second."""
    return ScenarioConfig(
        num_gnbs=2,
        num_users=4,
        duration=0.6,
        sample_interval=0.01,
        window_len=5,
        fault_time=0.2,
        num_failed_gnbs=1,
        master_seed=7,
        fed=FedConfig(rounds=3, local_epochs=2, centralized_epochs=3),
    )


@pytest.fixture
def tiny_cfg_path(tmp_path):
    """The tiny scenario as a JSON config file for CLI runs."""
    doc = {
        "num_gnbs": 2,
        "num_users": 4,
        "duration": 0.6,
        "sample_interval": 0.01,
        "window_len": 5,
        "fault_time": 0.2,
        "num_failed_gnbs": 1,
        "master_seed": 7,
        "fed": {"rounds": 3, "local_epochs": 2, "centralized_epochs": 3},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
