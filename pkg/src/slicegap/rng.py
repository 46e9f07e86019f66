"""Seeded random streams. Nothing in the package touches a global RNG."""

from __future__ import annotations

import numpy as np

SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    if int(seed) != seed or not (0 <= seed <= SEED_MAX):
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for ``seed``; distinct ``key`` tuples give independent sub-streams."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
