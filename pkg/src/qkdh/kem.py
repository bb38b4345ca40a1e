"""Key encapsulation on top of the quantum correlation phase.

Generation runs state preparation, sifting and parameter estimation only,
leaving both parties with raw keys. Encapsulation turns Alice's raw key
into a transportable package: reconciliation helper data, two hash seeds,
and a short verification tag; the session key is the long hash of the raw
key. Decapsulation corrects Bob's raw key with the helper data, checks the
tag, and either reproduces the key or rejects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hashing, protocol, recon
from .bits import BitVector, bits_to_hex, hex_to_bits
from .protocol import DOM_HASH, DOM_RECON, SessionParams
from .recon import HelperData


class KemAbort(Exception):
    """Raised when generation or encapsulation cannot produce a key."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason  # aborted_pe | aborted_len | aborted_short


@dataclass
class GenOutput:
    """Raw keys plus the adversary view; params carry the measured QBER."""

    x_a: BitVector
    x_b: BitVector
    eve_view: protocol.EveView
    params: SessionParams
    estimation: protocol.EstimationResult


@dataclass
class KemCiphertext:
    """Public package: helper data, both hash seeds, verification tag."""

    w: HelperData
    s: hashing.ToeplitzSeed
    s_prime: hashing.ToeplitzSeed
    v: BitVector

    @property
    def n(self) -> int:
        return self.s.n

    @property
    def ell(self) -> int:
        return self.s.m

    @property
    def tag_bits(self) -> int:
        return self.s_prime.m

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "t": self.tag_bits,
            "w": self.w.to_json(),
            "s": self.s.to_json(),
            "s_prime": self.s_prime.to_json(),
            "v": bits_to_hex(self.v),
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    @staticmethod
    def from_json(obj: dict) -> "KemCiphertext":
        s = hashing.ToeplitzSeed.from_json(obj["s"])
        s_prime = hashing.ToeplitzSeed.from_json(obj["s_prime"])
        if s.n != s_prime.n or s.n != int(obj["n"]):
            raise ValueError("inconsistent input lengths in ciphertext")
        return KemCiphertext(
            w=HelperData.from_json(obj["w"]),
            s=s,
            s_prime=s_prime,
            v=hex_to_bits(obj["v"], s_prime.m),
        )

    @staticmethod
    def parse(text: str) -> "KemCiphertext":
        return KemCiphertext.from_json(json.loads(text))


@dataclass
class KemOutput:
    key: BitVector
    ciphertext: KemCiphertext


def gen(params: SessionParams) -> GenOutput:
    """Correlation phase: raw keys for both parties, or an abort."""
    ex = protocol.exchange_raw_keys(params)
    if ex.aborted:
        raise KemAbort(ex.status)
    return GenOutput(
        x_a=ex.x_a,
        x_b=ex.x_b,
        eve_view=ex.eve_view,
        params=ex.params,
        estimation=ex.estimation,
    )


def encap(
    x_a: BitVector,
    params: SessionParams,
    rng: Optional[np.random.Generator] = None,
) -> KemOutput:
    """Derive the session key from Alice's raw key and build the ciphertext.

    The key length comes from the finite-size policy evaluated at the
    measured QBER carried in `params` (or from the explicit override).
    A zero length aborts instead of returning an empty key.
    """
    n = int(x_a.size)
    rng_recon = rng if rng is not None else params.stage_rng(DOM_RECON)
    rng_hash = rng if rng is not None else params.stage_rng(DOM_HASH)

    helper = recon.enc(x_a, params.recon, rng_recon)
    if params.key_len_override is not None:
        ell = params.key_len_override
    else:
        if params.measured_qber is None:
            raise ValueError("params.measured_qber unset; run gen first")
        ell = protocol.key_length(
            n,
            params.measured_qber,
            params.sample_size,
            params.eps_pe,
            helper.total_bits,
            params.tag_bits,
            params.eps_pa,
        )
    if ell == 0:
        raise KemAbort("aborted_len")

    seed_key = hashing.sample_seed(n, ell, rng_hash)
    seed_tag = hashing.sample_seed(n, params.tag_bits, rng_hash)
    ciphertext = KemCiphertext(
        w=helper,
        s=seed_key,
        s_prime=seed_tag,
        v=hashing.apply(seed_tag, x_a),
    )
    return KemOutput(key=hashing.apply(seed_key, x_a), ciphertext=ciphertext)


def decap(
    x_b: BitVector,
    ciphertext: KemCiphertext,
    params: SessionParams,
) -> Optional[BitVector]:
    """Recover the session key from Bob's raw key, or None on tag mismatch."""
    if x_b.size != ciphertext.n:
        raise ValueError("raw key length does not match ciphertext")
    corrected = recon.dec(ciphertext.w, x_b, params.recon)
    if not np.array_equal(hashing.apply(ciphertext.s_prime, corrected), ciphertext.v):
        return None
    return hashing.apply(ciphertext.s, corrected)
