"""Seeding discipline: reproducible, statistically independent substreams.

Every random decision in a run draws from a stream derived from
``(master_seed, node, purpose)`` via numpy's SeedSequence spawn-key
mechanism, so replicates can be re-run in isolation and per-node
randomness never depends on scheduling order.
"""
from __future__ import annotations

import numpy as np

# Stable purpose codes; appending is fine, renumbering breaks reproducibility.
PURPOSES = {
    "graph": 0,
    "partition": 1,
    "init": 2,
    "shuffle": 3,
    "tiebreak": 4,
    "dataset": 5,
}

RngSeed = "int | np.random.Generator | None"


def seed_streams(master: int, node: int, purpose: str) -> np.random.Generator:
    """Derive the RNG stream for one (master seed, node, purpose) key."""
    if purpose not in PURPOSES:
        raise ValueError(f"unknown rng purpose {purpose!r}; expected one of {sorted(PURPOSES)}")
    seq = np.random.SeedSequence(master, spawn_key=(PURPOSES[purpose], node))
    return np.random.default_rng(seq)


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, an existing Generator, or None (fresh entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
