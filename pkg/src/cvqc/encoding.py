"""Canonical byte encodings shared by transcripts, hashing and commitments."""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable

import numpy as np


def lp(data: bytes) -> bytes:
    """Length-prefixed field: 8-byte big-endian length, then the bytes."""
    return struct.pack(">Q", len(data)) + data


def join_fields(tag: bytes, fields: Iterable[bytes]) -> bytes:
    return tag + b"".join(lp(f) for f in fields)


def u64_bytes(values) -> bytes:
    return np.asarray(values, dtype=np.uint64).astype(">u8").tobytes()


def u64_from_bytes(data: bytes) -> np.ndarray:
    if len(data) % 8:
        raise ValueError("uint64 field length is not a multiple of 8")
    return np.frombuffer(data, dtype=">u8").astype(np.uint64)


def u8_bytes(values) -> bytes:
    arr = np.asarray(values)
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError("byte field out of range")
    return arr.astype(np.uint8).tobytes()


def u8_from_bytes(data: bytes) -> np.ndarray:
    return np.frombuffer(data, dtype=np.uint8).astype(np.int64)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def bits_msb_first(digest: bytes, k: int) -> np.ndarray:
    if k > 8 * len(digest):
        raise ValueError(f"cannot extract {k} bits from a {len(digest)}-byte digest")
    bits = np.unpackbits(np.frombuffer(digest, dtype=np.uint8))
    return bits[:k].astype(np.int64)
