"""Seeded random streams.

Every stream is ``Generator(PCG64(SeedSequence(master_seed, spawn_key=key)))``.
The spawn key is ``(purpose, *indices)``, so any (replicate, draw) pair gets
the same numbers no matter which worker or in which order it is computed.
"""

import numpy as np

# purpose tags, the first element of every spawn key
FAKE_TRAIN = 1
INNER = 2
ORACLE = 3
PERMUTE = 4
SAMPLING = 5
SIMULATE = 6
MARGINAL = 7

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, purpose: int, *indices: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=(purpose, *indices))
    return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
