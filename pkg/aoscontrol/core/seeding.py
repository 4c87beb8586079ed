"""Random stream derivation from one master seed.

Every stochastic component owns a ``numpy.random.Generator`` derived from the
master seed, a stream name and an instance index, so any run can be replayed
exactly and no two components share a stream.
"""

import zlib

import numpy as np


def stream_key(name: str) -> int:
    """Stable 32-bit key for a stream name (independent of PYTHONHASHSEED)."""
    return zlib.crc32(name.encode("utf-8"))


def derive_seed_sequence(seed: int, name: str, index: int = 0) -> np.random.SeedSequence:
    """Seed sequence for stream ``name``/``index`` under master ``seed``."""
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.SeedSequence(entropy=entropy, spawn_key=(stream_key(name), index))


def derive_rng(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Independent generator for stream ``name``/``index`` under master ``seed``."""
    return np.random.default_rng(derive_seed_sequence(seed, name, index))


def derive_int(seed: int, name: str, index: int = 0) -> int:
    """Derived 63-bit integer seed, used to seed nested components."""
    state = derive_seed_sequence(seed, name, index).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
