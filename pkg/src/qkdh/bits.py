"""Bit-vector helpers shared across the package.

Bit vectors are numpy uint8 arrays with values in {0, 1}. Index 0 is the
first transmitted / most significant bit everywhere, including hex
serialization (pad bits, when needed, go at the low end).
"""

from __future__ import annotations

import numpy as np

BitVector = np.ndarray


def as_bits(values) -> BitVector:
    """Coerce a sequence of 0/1 values to a canonical bit vector."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit vector must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit vector entries must be 0 or 1")
    return arr


def bits_from_str(s: str) -> BitVector:
    return as_bits([int(c) for c in s])


def bits_from_int(value: int, length: int) -> BitVector:
    """Expand an integer to `length` bits, most significant bit first."""
    if value < 0 or value >> length:
        raise ValueError(f"value does not fit in {length} bits")
    return as_bits([(value >> (length - 1 - i)) & 1 for i in range(length)])


def int_from_bits(bits: BitVector) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def bits_to_hex(bits: BitVector) -> str:
    """Hex encoding, MSB first; the final partial nibble is zero-padded."""
    bits = as_bits(bits)
    if bits.size == 0:
        return ""
    pad = (-bits.size) % 8
    padded = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    data = np.packbits(padded).tobytes()
    nibbles = (bits.size + 3) // 4
    return data.hex()[:nibbles]


def hex_to_bits(hexstr: str, length: int) -> BitVector:
    """Inverse of bits_to_hex for a known bit length."""
    if length == 0:
        return np.zeros(0, dtype=np.uint8)
    nibbles = (length + 3) // 4
    if len(hexstr) != nibbles:
        raise ValueError(f"expected {nibbles} hex digits for {length} bits")
    padded = hexstr + "0" * ((-len(hexstr)) % 2)
    data = bytes.fromhex(padded)
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    tail = bits[length:]
    if tail.any():
        raise ValueError("nonzero padding bits in hex string")
    return bits[:length].astype(np.uint8)


def bits_to_bytes(bits: BitVector) -> bytes:
    """Pack a byte-aligned bit vector, MSB first within each byte."""
    bits = as_bits(bits)
    if bits.size % 8:
        raise ValueError("bit length is not a multiple of 8")
    return np.packbits(bits).tobytes()


def bytes_to_bits(data: bytes) -> BitVector:
    if not data:
        return np.zeros(0, dtype=np.uint8)
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8)).astype(np.uint8)


def hamming_distance(a: BitVector, b: BitVector) -> int:
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return int(np.count_nonzero(a != b))
