"""
Reproducible random number substreams.

A master seed spawns one independent generator per work cell through a
counter-based split of ``numpy.random.SeedSequence``: the substream for a
cell depends only on ``(seed, key)``, never on scheduling order.
"""

import numpy as np


def _sequence(seed: int, key: tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(k) for k in key)
    )


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator owned by the work cell identified by ``key``."""
    return np.random.default_rng(_sequence(seed, key))


def child_seed(seed: int, *key: int) -> int:
    """Derive a 63-bit seed for a nested seeded run (e.g. SIMEX inside a bootstrap)."""
    state = _sequence(seed, key).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
