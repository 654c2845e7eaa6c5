"""Seeded random streams.

Every stochastic component draws from a numpy ``PCG64`` generator built from
``SeedSequence(seed, spawn_key=key)``.  The key names the stream (for
example ``(dim, point_index)`` for a Monte Carlo sweep point, or
``(SIM_STREAM, run)`` for a protocol run), so each stream is independent of
how many other streams exist or in which order they are consumed.  PCG64
output is identical across platforms for the same seed sequence.
"""
from __future__ import annotations

import numpy as np

SCATTER_STREAM = 1
POPULATION_STREAM = 2
SIM_STREAM = 3
VEMAC_STREAM = 4


def make_rng(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
