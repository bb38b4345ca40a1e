"""One-way information reconciliation.

The sender publishes helper data so the receiver can correct its string
toward the sender's, without any return traffic. The codec is per-block
Hamming(7,4) syndrome transmission, repeated for a configurable number of
passes with a seeded random interleaver in between so that leftover errors
are spread across fresh blocks.

Parity-check matrix: column j (1-indexed) of H is the binary expansion of
j, so a nonzero syndrome difference s points directly at the in-block
error position s-1 (0-indexed). The final partial block is zero-padded on
both sides; pad positions carry no payload and are stripped after each
pass.

Interleaver: each pass permutes the working vector with Fisher-Yates as
implemented by ``numpy.random.Generator.permutation`` seeded with
PCG64(pass seed). A ``permutation_seed_len`` of 0 selects the identity
permutation and serializes no seed bits.

Inputs shorter than one block are handled as a single zero-padded block,
which is what the exhaustive tiny-session analyses in `games` rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bits import BitVector, as_bits, bits_from_int, bits_to_hex, hex_to_bits, int_from_bits
from .rng import make_generator

BLOCK_LEN = 7

# H[k][j] = bit k of (j+1); columns enumerate 1..7.
PARITY_CHECK = np.array(
    [[(j + 1) >> k & 1 for j in range(BLOCK_LEN)] for k in range(3)],
    dtype=np.uint8,
)


@dataclass(frozen=True)
class ReconConfig:
    """Codec knobs: number of passes and interleaver seed width."""

    passes: int = 2
    permutation_seed_len: int = 64
    # Restricting the seed space keeps tiny instances enumerable; None
    # means the full 2**permutation_seed_len range.
    seed_choices: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.permutation_seed_len < 0:
            raise ValueError("permutation_seed_len must be >= 0")
        if self.seed_choices is not None:
            if self.permutation_seed_len == 0:
                raise ValueError("seed_choices requires a nonzero seed length")
            for s in self.seed_choices:
                if s >> self.permutation_seed_len:
                    raise ValueError("seed choice exceeds seed length")


@dataclass
class PassHelper:
    seed: int
    syndromes: np.ndarray  # one 3-bit value per block


@dataclass
class HelperData:
    """Public reconciliation message: per-pass seed and block syndromes."""

    n: int
    seed_bits: int
    passes: list[PassHelper] = field(default_factory=list)

    @property
    def total_bits(self) -> int:
        blocks = num_blocks(self.n)
        return len(self.passes) * (self.seed_bits + 3 * blocks)

    def to_bits(self) -> BitVector:
        """Exact public bit content, in transmission order."""
        parts = []
        for p in self.passes:
            if self.seed_bits:
                parts.append(bits_from_int(p.seed, self.seed_bits))
            parts.append(_syndromes_to_bits(p.syndromes))
        if not parts:
            return np.zeros(0, dtype=np.uint8)
        return np.concatenate(parts)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "seed_bits": self.seed_bits,
            "passes": [
                {
                    "seed": bits_to_hex(bits_from_int(p.seed, self.seed_bits)),
                    "syndromes": bits_to_hex(_syndromes_to_bits(p.syndromes)),
                }
                for p in self.passes
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "HelperData":
        n = int(obj["n"])
        seed_bits = int(obj["seed_bits"])
        blocks = num_blocks(n)
        passes = []
        for p in obj["passes"]:
            seed = int_from_bits(hex_to_bits(p["seed"], seed_bits)) if seed_bits else 0
            syn = _bits_to_syndromes(hex_to_bits(p["syndromes"], 3 * blocks))
            passes.append(PassHelper(seed=seed, syndromes=syn))
        return HelperData(n=n, seed_bits=seed_bits, passes=passes)


def num_blocks(n: int) -> int:
    return (n + BLOCK_LEN - 1) // BLOCK_LEN


def _syndromes_to_bits(syndromes: np.ndarray) -> BitVector:
    # 3 bits per block, most significant bit first.
    out = np.zeros(3 * syndromes.size, dtype=np.uint8)
    for k in range(3):
        out[k::3] = (syndromes >> (2 - k)) & 1
    return out


def _bits_to_syndromes(bits: BitVector) -> np.ndarray:
    if bits.size % 3:
        raise ValueError("syndrome bit stream not a multiple of 3")
    b = bits.reshape(-1, 3).astype(np.uint8)
    return (b[:, 0] << 2 | b[:, 1] << 1 | b[:, 2]).astype(np.uint8)


def _pass_permutation(seed: int, n: int, seed_bits: int) -> np.ndarray:
    if seed_bits == 0:
        return np.arange(n)
    return make_generator(seed).permutation(n)


def _block_syndromes(x: BitVector) -> np.ndarray:
    pad = (-x.size) % BLOCK_LEN
    padded = np.concatenate([x, np.zeros(pad, dtype=np.uint8)])
    blocks = padded.reshape(-1, BLOCK_LEN)
    syn_bits = (blocks @ PARITY_CHECK.T) & 1  # (blocks, 3), bit k in col k
    return (syn_bits[:, 0] | syn_bits[:, 1] << 1 | syn_bits[:, 2] << 2).astype(np.uint8)


def _draw_pass_seed(cfg: ReconConfig, rng: np.random.Generator) -> int:
    if cfg.permutation_seed_len == 0:
        return 0
    if cfg.seed_choices is not None:
        return int(cfg.seed_choices[rng.integers(0, len(cfg.seed_choices))])
    # Uniform over the full seed width, assembled from 32-bit draws.
    value = 0
    remaining = cfg.permutation_seed_len
    while remaining > 0:
        take = min(32, remaining)
        value = (value << take) | int(rng.integers(0, 1 << take))
        remaining -= take
    return value


def enc_with_seeds(x: BitVector, cfg: ReconConfig, seeds: list[int]) -> HelperData:
    """`enc` with explicitly chosen interleaver seeds (one per pass)."""
    x = as_bits(x)
    if x.size < 1:
        raise ValueError("input must be non-empty")
    if len(seeds) != cfg.passes:
        raise ValueError("need exactly one interleaver seed per pass")
    helper = HelperData(n=x.size, seed_bits=cfg.permutation_seed_len)
    for seed in seeds:
        perm = _pass_permutation(seed, x.size, cfg.permutation_seed_len)
        helper.passes.append(PassHelper(seed=seed, syndromes=_block_syndromes(x[perm])))
    return helper


def enc(x: BitVector, cfg: ReconConfig, rng: np.random.Generator) -> HelperData:
    """Produce helper data for `x`: per pass, an interleaver seed plus the
    Hamming(7,4) syndrome of every (zero-padded) 7-bit block."""
    seeds = [_draw_pass_seed(cfg, rng) for _ in range(cfg.passes)]
    return enc_with_seeds(x, cfg, seeds)


def dec(w: HelperData, y: BitVector, cfg: ReconConfig) -> BitVector:
    """Correct `y` toward the string that produced `w`.

    Each pass flips at most one bit per block: the position named by the
    syndrome difference. Blocks with a zero difference are left untouched.
    """
    y = as_bits(y)
    if y.size != w.n:
        raise ValueError(f"length mismatch: helper n={w.n}, input {y.size}")
    if len(w.passes) != cfg.passes or w.seed_bits != cfg.permutation_seed_len:
        raise ValueError("helper data does not match codec config")
    work = y.copy()
    for p in w.passes:
        perm = _pass_permutation(p.seed, work.size, cfg.permutation_seed_len)
        permuted = work[perm]
        diff = _block_syndromes(permuted) ^ p.syndromes
        hit = np.nonzero(diff)[0]
        positions = hit * BLOCK_LEN + (diff[hit].astype(np.int64) - 1)
        pad = (-permuted.size) % BLOCK_LEN
        padded = np.concatenate([permuted, np.zeros(pad, dtype=np.uint8)])
        padded[positions] ^= 1
        corrected = padded[: work.size]
        work = np.empty_like(corrected)
        work[perm] = corrected
    return work
