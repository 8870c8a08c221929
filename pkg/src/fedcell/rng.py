"""Seed derivation for all random decisions in a run.

Every stochastic choice (placement, fault selection, per-UE noise, splits,
weight init, batch shuffles, client picks) draws from its own stream derived
from the master seed plus a fixed integer path. Streams are independent of
call order, so per-UE sampling or per-client training could be parallelized
without changing any output byte.
"""

from __future__ import annotations

import numpy as np

# Stream tags. Changing a tag changes every artifact downstream of it.
TOPOLOGY = 1
FAULT_PICK = 2
TELEMETRY = 3
SPLIT = 4
MODEL_INIT = 5
CENTRAL_TRAIN = 6
CLIENT_TRAIN = 7
CLIENT_PICK = 8


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent PCG64 generator for (master_seed, *path)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, *path])))


def subseed(master_seed: int, *path: int) -> int:
    """Stable integer seed for (master_seed, *path), for APIs that take a seed."""
    state = np.random.SeedSequence([master_seed, *path]).generate_state(1, dtype=np.uint64)
    return int(state[0])
