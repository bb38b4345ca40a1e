"""One-time data encapsulation: XOR encryption under a fresh uniform key.

Two modes. OneTimePad XORs the message with a key prefix and is
information-theoretically one-time secure, but caps the message at the key
length. Keystream removes the length cap by XORing with SHAKE-256 output;
the keystream for a key K is

    SHAKE256( len(K_bits) as 4-byte big-endian || K packed MSB-first )

read to the message length. Neither mode pads or authenticates: a flipped
ciphertext bit flips exactly that plaintext bit.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from .bits import BitVector, as_bits, bits_to_bytes, bytes_to_bits


class DemMode(enum.Enum):
    ONE_TIME_PAD = "otp"
    KEYSTREAM = "keystream"


@dataclass
class DemCiphertext:
    mode: DemMode
    body: BitVector

    def to_bytes(self) -> bytes:
        """File format: one mode byte, then the raw body bytes."""
        mode_byte = b"\x00" if self.mode is DemMode.ONE_TIME_PAD else b"\x01"
        return mode_byte + bits_to_bytes(self.body)

    @staticmethod
    def from_bytes(data: bytes) -> "DemCiphertext":
        if not data:
            raise ValueError("empty ciphertext")
        if data[0] not in (0, 1):
            raise ValueError("unknown mode byte")
        mode = DemMode.ONE_TIME_PAD if data[0] == 0 else DemMode.KEYSTREAM
        return DemCiphertext(mode=mode, body=bytes_to_bits(data[1:]))


def dem_gen(length: int, rng: np.random.Generator) -> BitVector:
    """Fresh uniform key of `length` bits."""
    if length <= 0:
        raise ValueError("key length must be positive")
    return rng.integers(0, 2, length, dtype=np.uint8)


def _keystream(key: BitVector, length: int) -> BitVector:
    pad = (-key.size) % 8
    packed = bits_to_bytes(np.concatenate([key, np.zeros(pad, dtype=np.uint8)]))
    shake = hashlib.shake_256(key.size.to_bytes(4, "big") + packed)
    stream = bytes_to_bits(shake.digest((length + 7) // 8))
    return stream[:length]


def dem_enc(key: BitVector, message: BitVector, mode: DemMode) -> DemCiphertext:
    key = as_bits(key)
    message = as_bits(message)
    if mode is DemMode.ONE_TIME_PAD:
        if message.size > key.size:
            raise ValueError("one-time pad requires |message| <= |key|")
        mask = key[: message.size]
    else:
        mask = _keystream(key, message.size)
    return DemCiphertext(mode=mode, body=message ^ mask)


def dem_dec(key: BitVector, ciphertext: DemCiphertext) -> BitVector:
    key = as_bits(key)
    body = ciphertext.body
    if ciphertext.mode is DemMode.ONE_TIME_PAD:
        if body.size > key.size:
            raise ValueError("ciphertext longer than one-time pad key")
        mask = key[: body.size]
    else:
        mask = _keystream(key, body.size)
    return body ^ mask
