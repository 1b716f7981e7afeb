"""Counter-based random streams.

All stochastic code in the package draws from Philox generators keyed by a
user seed plus an integer stream path.  Distinct paths give statistically
independent streams, and a (seed, path) pair always yields the same stream
regardless of thread scheduling, so parallel chains and replicates are
reproducible.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the given seed and stream path."""
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seed=ss))
