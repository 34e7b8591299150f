"""Per-replica seed derivation.

Every replica gets a 32-bit seed computed from ``(master_seed, replica_index)``
alone, so results never depend on how replicas are scheduled across workers.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def replica_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence(int(master) & _MASK64, spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def replica_seeds(master: int, start: int, stop: int) -> np.ndarray:
    return np.array([replica_seed(master, i) for i in range(start, stop)], dtype=np.int64)


def derive(master: int, *tags: int) -> int:
    """Child master seed for a sub-experiment, keyed by integer tags."""
    ss = np.random.SeedSequence(int(master) & _MASK64, spawn_key=(0xD5,) + tuple(int(t) for t in tags))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])
