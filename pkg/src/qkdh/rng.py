"""Deterministic seeding utilities.

All randomness in the package flows from 64-bit unsigned seeds. Bulk
sampling uses numpy's PCG64; independent sub-seeds (one per protocol
component, per trial, per sweep cell) are derived from a master seed with
the SplitMix64 sequence, which is stable across platforms and versions:

    state_i = master + (i + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
    seed_i  = mix(state_i)

where mix is the SplitMix64 finalizer. Derivations are documented here so
outputs can be reproduced bit-exactly from the master seed alone.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood 2014 constants)."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Counter-based sub-seed: element `index` of the SplitMix64 stream."""
    return splitmix64((master + (index + 1) * _GAMMA) & MASK64)


def make_generator(seed: int) -> np.random.Generator:
    """PCG64 generator for bulk sampling under a derived seed."""
    return np.random.Generator(np.random.PCG64(seed & MASK64))
