"""Two-universal hashing with Toeplitz matrices over GF(2).

The family is used for privacy amplification and for the short
verification tag. A seed is the n+m-1 bit diagonal vector of an m-by-n
Toeplitz matrix T with

    T[i][j] = diagonals[i - j + n - 1]

so diagonals[n-1] sits at T[0][0], diagonals[0] at the top-right corner
and diagonals[n+m-2] at the bottom-left. Index 0 of every bit vector is
the most significant bit, matching the hex serialization in `bits`.

Multiplying T by an input vector is a linear convolution, so the hash is
computed as a convolution mod 2: exact integer convolution for small
sizes, FFT convolution (with an integrality check) for large ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitVector, as_bits, bits_to_hex, hex_to_bits

# Above this work factor, direct O(n*m) convolution loses to FFT.
_DIRECT_WORK_LIMIT = 1 << 24


@dataclass(frozen=True)
class ToeplitzSeed:
    """Diagonal vector defining an m-by-n Toeplitz matrix over GF(2)."""

    n: int
    m: int
    diagonals: BitVector

    def __post_init__(self):
        if not 0 < self.m <= self.n:
            raise ValueError("seed requires 0 < m <= n")
        if self.diagonals.size != self.n + self.m - 1:
            raise ValueError("diagonals must have length n + m - 1")

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "diagonals": bits_to_hex(self.diagonals)}

    @staticmethod
    def from_json(obj: dict) -> "ToeplitzSeed":
        n, m = int(obj["n"]), int(obj["m"])
        return ToeplitzSeed(n, m, hex_to_bits(obj["diagonals"], n + m - 1))


def sample_seed(n: int, m: int, rng: np.random.Generator) -> ToeplitzSeed:
    """Draw a uniform seed for an m-by-n Toeplitz matrix."""
    if m == 0 or m > n:
        raise ValueError("seed requires 0 < m <= n")
    diagonals = rng.integers(0, 2, n + m - 1, dtype=np.uint8)
    return ToeplitzSeed(n=n, m=m, diagonals=diagonals)


def apply(seed: ToeplitzSeed, x: BitVector) -> BitVector:
    """Hash an n-bit input down to m bits: output = T @ x over GF(2)."""
    x = as_bits(x)
    if x.size != seed.n:
        raise ValueError(f"input length {x.size} != n={seed.n}")
    conv = _convolve(seed.diagonals, x)
    return (conv[seed.n - 1 : seed.n - 1 + seed.m] & 1).astype(np.uint8)


def _convolve(d: BitVector, x: BitVector) -> np.ndarray:
    """Full linear convolution of two 0/1 vectors, exact in int64."""
    if d.size * x.size <= _DIRECT_WORK_LIMIT:
        return np.convolve(d.astype(np.int64), x.astype(np.int64))
    out_len = d.size + x.size - 1
    size = 1 << (out_len - 1).bit_length()
    spec = np.fft.rfft(d, size) * np.fft.rfft(x, size)
    conv = np.fft.irfft(spec, size)[:out_len]
    rounded = np.rint(conv)
    # 0/1 inputs keep coefficients well below 2^53; drift means a real bug.
    if np.max(np.abs(conv - rounded)) > 0.25:
        raise ArithmeticError("FFT convolution lost integrality")
    return rounded.astype(np.int64)


def toeplitz_matrix(seed: ToeplitzSeed) -> np.ndarray:
    """Materialize T explicitly (small sizes only; used by diagnostics)."""
    i = np.arange(seed.m)[:, None]
    j = np.arange(seed.n)[None, :]
    return seed.diagonals[i - j + seed.n - 1].astype(np.uint8)
