"""
Splittable seed derivation.

Every stochastic component draws from its own stream keyed by
(seed, key, ...), so results do not depend on the order in which trials,
repetitions or components are executed.
"""

import zlib

import numpy as np

_KEY_SPACE = 2**32


def _key_to_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) % _KEY_SPACE


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) % 2**64, *(_key_to_int(k) for k in keys)])


def derive_seed(seed: int, *keys) -> int:
    """Derive a 63-bit child seed from a base seed and a tuple of keys"""
    state = seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def rng_for(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *keys))
