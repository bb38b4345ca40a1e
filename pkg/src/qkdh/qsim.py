"""Classical simulation of BB84 state preparation, transmission and measurement.

A transmitted qubit is always one of the four BB84 states, so it is stored
as the pair (basis, bit). Under the supported adversary strategies (passive
noise, per-symbol intercept-resend) every intermediate state stays in that
set, which makes the classical pair representation exact rather than an
approximation.

Per-symbol operations (`prepare`, `measure`, `transmit`) define the
semantics; the `*_stream` variants are vectorized equivalents used for
Monte-Carlo throughput. The stream variants draw randomness in a different
order, so they match the per-symbol path in distribution, not draw-by-draw.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bits import BitVector


class Basis(enum.IntEnum):
    """The two BB84 encoding bases."""

    COMPUTATIONAL = 0
    HADAMARD = 1


class AdversaryKind(enum.Enum):
    PASSIVE = "passive"
    INTERCEPT_RESEND = "intercept_resend"


@dataclass(frozen=True)
class BB84Symbol:
    """One in-flight qubit: encoding basis and encoded bit."""

    basis: Basis
    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")


@dataclass(frozen=True)
class ChannelModel:
    """Per-transit in-basis bit-flip probability."""

    flip_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 0.5:
            raise ValueError("flip_prob must lie in [0, 0.5]")


@dataclass(frozen=True)
class AdversaryStrategy:
    """Eavesdropper behaviour on the quantum channel.

    `intercept_prob` is the independent per-symbol probability that the
    symbol is measured in a fresh uniform basis and re-sent in the measured
    state. Passive strategies never intercept.
    """

    kind: AdversaryKind = AdversaryKind.PASSIVE
    intercept_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.intercept_prob <= 1.0:
            raise ValueError("intercept_prob must lie in [0, 1]")
        if self.kind is AdversaryKind.PASSIVE and self.intercept_prob != 0.0:
            raise ValueError("passive adversary must have intercept_prob 0")

    @staticmethod
    def passive() -> "AdversaryStrategy":
        return AdversaryStrategy(AdversaryKind.PASSIVE, 0.0)

    @staticmethod
    def intercept_resend(prob: float = 1.0) -> "AdversaryStrategy":
        return AdversaryStrategy(AdversaryKind.INTERCEPT_RESEND, prob)


@dataclass
class EveRecord:
    """Eavesdropper measurement log: one row per intercepted symbol."""

    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    bases: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    outcomes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))

    def __len__(self) -> int:
        return int(self.indices.size)

    def as_tuples(self) -> tuple:
        return tuple(
            (int(i), int(b), int(o))
            for i, b, o in zip(self.indices, self.bases, self.outcomes)
        )


@dataclass(frozen=True)
class EveRecordEntry:
    index: int
    basis: Basis
    outcome: int


def prepare(bit: int, basis: Basis) -> BB84Symbol:
    """Encode one bit in the given basis."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    return BB84Symbol(basis=basis, bit=bit)


def measure(symbol: BB84Symbol, basis: Basis, rng: np.random.Generator) -> int:
    """Measure a symbol.

    A matching basis returns the encoded bit; a mismatched basis returns a
    fresh uniform bit (the two bases are mutually unbiased).
    """
    if basis == symbol.basis:
        return symbol.bit
    return int(rng.integers(0, 2))


def transmit(
    symbol: BB84Symbol,
    channel: ChannelModel,
    strategy: AdversaryStrategy,
    rng: np.random.Generator,
    index: int = 0,
) -> tuple[BB84Symbol, Optional[EveRecordEntry]]:
    """Send one symbol through the noisy channel and past the adversary.

    Channel noise is a single in-basis flip applied once per transit,
    before any interception. An intercepting adversary measures in a
    uniform basis, logs the outcome, and forwards the measured state.
    """
    bit = symbol.bit
    if channel.flip_prob > 0 and rng.random() < channel.flip_prob:
        bit ^= 1
    noisy = BB84Symbol(symbol.basis, bit)

    if strategy.intercept_prob > 0 and rng.random() < strategy.intercept_prob:
        eve_basis = Basis(int(rng.integers(0, 2)))
        outcome = measure(noisy, eve_basis, rng)
        entry = EveRecordEntry(index=index, basis=eve_basis, outcome=outcome)
        return BB84Symbol(eve_basis, outcome), entry
    return noisy, None


def transmit_stream(
    bits: BitVector,
    bases: BitVector,
    channel: ChannelModel,
    strategy: AdversaryStrategy,
    rng: np.random.Generator,
) -> tuple[BitVector, BitVector, EveRecord]:
    """Vectorized `transmit` over a whole symbol stream.

    Returns the forwarded bits, forwarded bases and the adversary's record.
    """
    n = bits.size
    out_bits = bits.copy()
    out_bases = bases.copy()

    if channel.flip_prob > 0:
        flips = rng.random(n) < channel.flip_prob
        out_bits ^= flips.astype(np.uint8)

    q = strategy.intercept_prob
    if q <= 0:
        return out_bits, out_bases, EveRecord()

    hit = rng.random(n) < q if q < 1 else np.ones(n, dtype=bool)
    eve_bases = rng.integers(0, 2, n, dtype=np.uint8)
    coin = rng.integers(0, 2, n, dtype=np.uint8)
    same = eve_bases == out_bases
    eve_out = np.where(same, out_bits, coin).astype(np.uint8)

    out_bits = np.where(hit, eve_out, out_bits).astype(np.uint8)
    out_bases = np.where(hit, eve_bases, out_bases).astype(np.uint8)
    record = EveRecord(
        indices=np.nonzero(hit)[0].astype(np.int64),
        bases=eve_bases[hit].copy(),
        outcomes=eve_out[hit].copy(),
    )
    return out_bits, out_bases, record


def measure_stream(
    bits: BitVector,
    bases: BitVector,
    measurement_bases: BitVector,
    rng: np.random.Generator,
) -> BitVector:
    """Vectorized `measure` over a whole symbol stream."""
    coin = rng.integers(0, 2, bits.size, dtype=np.uint8)
    return np.where(measurement_bases == bases, bits, coin).astype(np.uint8)
