"""Seed derivation and random streams.

Every realization draws from its own Philox-4x64 stream (numpy's counter-based
bit generator) keyed by a 64-bit seed. Seeds for realization ``i`` are derived
from ``(master_seed, i, stream)`` with the SplitMix64 finalizer, so results do
not depend on the order in which realizations are executed.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream labels
STREAM_PRIMARY = 0
STREAM_SECOND_CHAIN = 1
STREAM_SWEEP = 2

PRNG_NAME = "numpy.random.Philox(4x64-10)/splitmix64-derive-v1"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int, stream: int = STREAM_PRIMARY) -> int:
    """64-bit seed for work unit ``index`` of ``stream`` under ``master_seed``."""
    if master_seed < 0 or index < 0 or stream < 0:
        raise ValueError("seeds, indices and stream labels must be non-negative")
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ (stream & MASK64))
    return splitmix64(h ^ (index & MASK64))


def disorder_generator(seed: int) -> np.random.Generator:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed))
