"""Hybrid encryption: KEM-transported key feeding the one-time DEM."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dem, kem
from .bits import BitVector, bits_to_hex, hex_to_bits
from .dem import DemCiphertext, DemMode
from .kem import KemCiphertext
from .protocol import SessionParams


@dataclass
class HybridCiphertext:
    c1: KemCiphertext
    c2: DemCiphertext

    def to_json(self) -> dict:
        return {
            "c1": self.c1.to_json(),
            "mode": self.c2.mode.value,
            "c2_hex": bits_to_hex(self.c2.body),
            "c2_bits": int(self.c2.body.size),
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    @staticmethod
    def from_json(obj: dict) -> "HybridCiphertext":
        mode = DemMode(obj["mode"])
        nbits = int(obj["c2_bits"])
        return HybridCiphertext(
            c1=KemCiphertext.from_json(obj["c1"]),
            c2=DemCiphertext(mode=mode, body=hex_to_bits(obj["c2_hex"], nbits)),
        )

    @staticmethod
    def parse(text: str) -> "HybridCiphertext":
        return HybridCiphertext.from_json(json.loads(text))


def qhe_gen(params: SessionParams) -> kem.GenOutput:
    """Correlation phase; aborts propagate unchanged."""
    return kem.gen(params)


def qhe_enc(
    x_a: BitVector,
    message: BitVector,
    params: SessionParams,
    mode: DemMode = DemMode.KEYSTREAM,
    rng: Optional[np.random.Generator] = None,
) -> HybridCiphertext:
    """Encapsulate a fresh key and encrypt the message under it.

    In one-time-pad mode an oversized message fails loudly here rather
    than silently switching modes.
    """
    out = kem.encap(x_a, params, rng=rng)
    if mode is DemMode.ONE_TIME_PAD and message.size > out.key.size:
        raise ValueError(
            f"message ({message.size} bits) exceeds key length {out.key.size} "
            "in one-time-pad mode"
        )
    return HybridCiphertext(c1=out.ciphertext, c2=dem.dem_enc(out.key, message, mode))


def qhe_dec(
    x_b: BitVector,
    ciphertext: HybridCiphertext,
    params: SessionParams,
) -> Optional[BitVector]:
    """Recover the message, or None when decapsulation rejects."""
    key = kem.decap(x_b, ciphertext.c1, params)
    if key is None:
        return None
    return dem.dem_dec(key, ciphertext.c2)
