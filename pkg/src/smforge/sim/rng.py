"""Seed-stream derivation for reproducible scenarios.

PCG64 with SeedSequence spawn keys: stream (0,) places robots, stream
(1, i) belongs to robot i (reserved for future per-robot noise models).
The algorithm name is recorded in every metrics header so a run can be
reproduced exactly.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "pcg64"


def placement_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))


def robot_stream(seed: int, robot_idx: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, robot_idx)))
    )
