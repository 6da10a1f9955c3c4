"""Reproducible random streams.

Every stream is a Philox generator keyed by ``(seed, index)`` through
``SeedSequence.spawn_key``; no state is shared between streams, so workers
owning disjoint indices produce identical results in any execution order.
"""

from __future__ import annotations

import numpy as np

# Trials per stream in batched simulation. Part of the reproducibility contract:
# changing it changes every batch result for a given seed.
CHUNK_SIZE = 65_536


def stream(seed: int, index: int, *, purpose: int = 0) -> np.random.Generator:
    """Independent generator for stream ``index`` under ``seed``.

    ``purpose`` separates families of streams (trial chunks vs. auxiliary
    estimates) that would otherwise share indices.
    """
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    ss = np.random.SeedSequence(seed, spawn_key=(purpose, index))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(trials: int, chunk: int = CHUNK_SIZE) -> list[int]:
    """Split ``trials`` into consecutive chunks; the last one may be short."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    full, rest = divmod(trials, chunk)
    return [chunk] * full + ([rest] if rest else [])
