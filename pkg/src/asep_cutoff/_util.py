"""Seed plumbing shared by the samplers and Monte Carlo drivers."""

import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Accept an int, a ``SeedSequence``, a ``Generator`` or ``None``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replica_seeds(seed, n: int) -> np.ndarray:
    """Independent 32-bit seeds for ``n`` replicas, derived by replica index.

    Seed ``i`` depends only on ``(seed, i)``, so adding replicas never
    changes the earlier ones and aggregation order is fixed.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        ss = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (i,))
        out[i] = int(ss.generate_state(1, dtype=np.uint32)[0])
    return out
