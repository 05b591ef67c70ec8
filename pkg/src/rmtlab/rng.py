"""Seed derivation and generator construction.

All randomness in the package flows through counter-based Philox streams so
that campaigns shard across processes without any coordination: every sample
index maps to its own statistically independent stream, and regenerating a
sample from (master_seed, index) is bit-exact no matter which worker ran it.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(master_seed: int, sample_index: int) -> int:
    """Per-sample seed, injective in sample_index for a fixed master seed.

    index -> master + GOLDEN*index is injective mod 2^64 (GOLDEN is odd) and
    the SplitMix64 finalizer is a bijection, so distinct indices can never
    collide.
    """
    return _mix64((master_seed + _GOLDEN * (sample_index + 1)) & _MASK64)


def generator(seed: int) -> np.random.Generator:
    """Counter-based generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
