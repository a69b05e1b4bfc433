"""Trapdoor claw-free (NTCF) and trapdoor injective (NTIF) function families.

Two backends are provided, both noiseless and deliberately insecure:

``mock``
    A keyed bijection ``P`` on ``R = w + 9`` bit strings (three rounds of an
    odd multiply-add followed by a xorshift).  Preimages are embedded with
    eight zero padding bits, so the range is sparse::

        NTCF: f(b, x) = P(((x xor b*delta)) << 8)
        NTIF: f(b, x) = P(((b << w) | x) << 8)

    The public key holds the forward round constants, which makes the
    function trivially invertible for anyone who reads them.  It exists for
    exhaustive testing, not secrecy.

``toylwe``
    ``f(b, x) = A x + b A s (mod q)`` with an invertible square ``A``; the
    injective variant is ``f(b, x) = M (x, b) (mod q)`` with an invertible
    ``(m+1) x (m+1)`` matrix ``M``.  No noise, so no hardness.

Domain elements are Python ints of ``w`` bits (toy-LWE vectors are packed
with ``ceil(log2 q)`` bits per coordinate).  ``None`` is the explicit
reject value of the inversion routines.
"""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MOCK_W_RANGE = (2, 24)
PAD_BITS = 8
_MASK_PAD = (1 << PAD_BITS) - 1


class FamilyKind(enum.IntEnum):
    NTIF = 0
    NTCF = 1


class KeyFormatError(ValueError):
    """Malformed or mismatched keys."""


class UnsupportedParameters(ValueError):
    """Parameters outside what a backend supports."""


# ---------------------------------------------------------------------------
# mock backend math, shared by scalar and numpy code paths
# ---------------------------------------------------------------------------


def _odd_inverse(a: int, bits: int) -> int:
    return pow(a, -1, 1 << bits)


def _mix(z, mul, add, mask, shift):
    for a, c in zip(mul, add):
        z = (z * a + c) & mask
        z = z ^ (z >> shift)
    return z


def _unshift(y, shift, bits: int):
    # inverse of y = z ^ (z >> shift)
    z, k = y, int(shift)
    while k < bits:
        z = y ^ (z >> shift)
        k += int(shift)
    return z


def _unmix(z, inv_mul, add, mask, shift, bits: int):
    for ia, c in zip(reversed(list(inv_mul)), reversed(list(add))):
        z = ((_unshift(z, shift, bits) - c) * ia) & mask
    return z


@dataclass(frozen=True)
class PublicKey:
    backend: str
    kind: FamilyKind
    w: int
    params: tuple

    def to_bytes(self) -> bytes:
        return _pack_key(self.backend, self.kind, self.w, self.params)

    @property
    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


@dataclass(frozen=True)
class SecretKey:
    backend: str
    kind: FamilyKind
    w: int
    params: tuple

    def to_bytes(self) -> bytes:
        return _pack_key(self.backend, self.kind, self.w, self.params)


@dataclass(frozen=True)
class KeyPair:
    pk: PublicKey
    sk: SecretKey

    @property
    def kind(self) -> FamilyKind:
        return self.pk.kind

    @property
    def w(self) -> int:
        return self.pk.w

    @property
    def backend(self) -> str:
        return self.pk.backend


# ---------------------------------------------------------------------------
# serialization: tag(4) | kind(1) | w(2) | count(4) | count signed 64-bit words
# nested parameter tuples are written as (length, items...), scalars as (-1, value)
# ---------------------------------------------------------------------------

_TAGS = {"mock": b"MOCK", "toylwe": b"TLWE"}
_TAG_NAMES = {v: k for k, v in _TAGS.items()}


def _flatten(params) -> list[int]:
    out = []
    for p in params:
        if isinstance(p, (tuple, list)):
            out.append(len(p))
            out.extend(_flatten(p))
        else:
            out.append(-1)
            out.append(int(p))
    return out


def _pack_key(backend: str, kind: FamilyKind, w: int, params: tuple) -> bytes:
    flat = _flatten(params)
    body = b"".join(struct.pack(">q", v) for v in flat)
    return _TAGS[backend] + struct.pack(">BHI", int(kind), w, len(flat)) + body


def _unflatten(flat: list[int], pos: int, count: int):
    out = []
    for _ in range(count):
        marker = flat[pos]
        pos += 1
        if marker == -1:
            out.append(flat[pos])
            pos += 1
        else:
            sub, pos = _unflatten(flat, pos, marker)
            out.append(tuple(sub))
    return out, pos


def _unpack(data: bytes):
    tag = bytes(data[:4])
    if tag not in _TAG_NAMES:
        raise KeyFormatError(f"unknown backend tag {tag!r}")
    kind, w, count = struct.unpack(">BHI", data[4:11])
    if len(data) != 11 + 8 * count:
        raise KeyFormatError("key length mismatch")
    flat = list(struct.unpack(f">{count}q", data[11:]))
    params, pos = [], 0
    while pos < count:
        sub, pos = _unflatten(flat, pos, 1)
        params.extend(sub)
    return _TAG_NAMES[tag], FamilyKind(kind), w, tuple(params)


def public_key_from_bytes(data: bytes) -> PublicKey:
    return PublicKey(*_unpack(data))


def secret_key_from_bytes(data: bytes) -> SecretKey:
    return SecretKey(*_unpack(data))


# ---------------------------------------------------------------------------
# mock backend
# ---------------------------------------------------------------------------


def _mock_geometry(w: int) -> tuple[int, int, int]:
    bits = w + 1 + PAD_BITS
    return bits, (1 << bits) - 1, (bits + 1) // 2


def _mock_gen(kind: FamilyKind, w: int, rng: np.random.Generator) -> KeyPair:
    lo, hi = MOCK_W_RANGE
    if not lo <= w <= hi:
        raise UnsupportedParameters(f"mock backend supports w in [{lo}, {hi}], got {w}")
    bits, mask, _ = _mock_geometry(w)
    mul = tuple(int(rng.integers(0, 1 << (bits - 1))) * 2 + 1 for _ in range(3))
    add = tuple(int(rng.integers(0, 1 << bits)) for _ in range(3))
    delta = int(rng.integers(1, 1 << w)) if kind == FamilyKind.NTCF else 0
    inv = tuple(_odd_inverse(a, bits) for a in mul)
    pk = PublicKey("mock", kind, w, (mul, add, delta))
    sk = SecretKey("mock", kind, w, (inv, add, delta))
    return KeyPair(pk, sk)


def _mock_embed(kind: FamilyKind, w: int, delta: int, b, x):
    if kind == FamilyKind.NTCF:
        return (x ^ (b * delta)) << PAD_BITS
    return ((b << w) | x) << PAD_BITS


def _mock_eval(pk: PublicKey, b: int, x: int) -> int:
    mul, add, delta = pk.params
    bits, mask, shift = _mock_geometry(pk.w)
    return _mix(_mock_embed(pk.kind, pk.w, delta, b, x), mul, add, mask, shift)


def _mock_preimage(sk: SecretKey, y: int) -> int | None:
    inv, add, _ = sk.params
    bits, mask, shift = _mock_geometry(sk.w)
    if not 0 <= y <= mask:
        return None
    z = _unmix(y, inv, add, mask, shift, bits)
    if z & _MASK_PAD:
        return None
    z >>= PAD_BITS
    if sk.kind == FamilyKind.NTCF and z >> sk.w:
        return None
    return z


# ---------------------------------------------------------------------------
# toy-LWE backend
# ---------------------------------------------------------------------------

TOYLWE_PARAMS = {4: (2, 5), 6: (2, 7), 8: (3, 5), 10: (3, 7), 12: (4, 7), 16: (4, 13)}


def toylwe_params(lam: int) -> tuple[int, int]:
    """(dimension, modulus) for a security parameter; insecure by design."""
    eligible = [k for k in TOYLWE_PARAMS if k <= lam]
    if not eligible:
        raise UnsupportedParameters(f"toy-LWE needs lambda >= {min(TOYLWE_PARAMS)}")
    return TOYLWE_PARAMS[max(eligible)]


def _digit_bits(q: int) -> int:
    return max(1, (q - 1).bit_length())


def encode_vector(v: Sequence[int], q: int) -> int:
    B = _digit_bits(q)
    out = 0
    for c in v:
        out = (out << B) | (int(c) % q)
    return out


def decode_vector(x: int, m: int, q: int) -> tuple[int, ...] | None:
    B = _digit_bits(q)
    if x < 0 or x >> (B * m):
        return None
    digits = []
    for _ in range(m):
        digits.append(x & ((1 << B) - 1))
        x >>= B
    if any(d >= q for d in digits):
        return None
    return tuple(reversed(digits))


def _matmul_mod(A, v, q) -> tuple[int, ...]:
    return tuple(int(sum(a * b for a, b in zip(row, v)) % q) for row in A)


def _random_invertible(m: int, q: int, rng: np.random.Generator):
    from sympy import Matrix

    while True:
        A = Matrix(rng.integers(0, q, size=(m, m)).tolist())
        if A.det() % q != 0:
            return A


def _inv_mod(A, q: int) -> tuple[tuple[int, ...], ...]:
    from sympy import Matrix

    inv = Matrix(A).inv_mod(q)
    return tuple(tuple(int(v) for v in inv.row(i)) for i in range(inv.rows))


def _as_rows(A) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in (A.tolist() if hasattr(A, "tolist") else A))


def toylwe_ntcf_from_matrix(A, s: Sequence[int], q: int) -> KeyPair:
    """NTCF key ``f(b, x) = A x + b A s mod q`` from explicit parameters."""
    A = _as_rows(A)
    m = len(A)
    s = tuple(int(v) % q for v in s)
    if not any(s):
        raise UnsupportedParameters("secret shift must be nonzero")
    As = _matmul_mod(A, s, q)
    w = _digit_bits(q) * m
    pk = PublicKey("toylwe", FamilyKind.NTCF, w, (q, m, A, As))
    sk = SecretKey("toylwe", FamilyKind.NTCF, w, (q, m, _inv_mod(A, q), s))
    return KeyPair(pk, sk)


def toylwe_ntif_from_matrix(M, q: int) -> KeyPair:
    """NTIF key ``f(b, x) = M (x, b) mod q`` from an explicit invertible matrix."""
    M = _as_rows(M)
    m = len(M) - 1
    w = _digit_bits(q) * m
    pk = PublicKey("toylwe", FamilyKind.NTIF, w, (q, m, M))
    sk = SecretKey("toylwe", FamilyKind.NTIF, w, (q, m, _inv_mod(M, q)))
    return KeyPair(pk, sk)


def _toylwe_gen(kind: FamilyKind, lam: int, rng: np.random.Generator) -> KeyPair:
    m, q = toylwe_params(lam)
    if kind == FamilyKind.NTCF:
        A = _random_invertible(m, q, rng)
        s = [0] * m
        while not any(s):
            s = [int(v) for v in rng.integers(0, q, size=m)]
        return toylwe_ntcf_from_matrix(A, s, q)
    return toylwe_ntif_from_matrix(_random_invertible(m + 1, q, rng), q)


def _toylwe_eval(pk: PublicKey, b: int, x: int) -> int:
    if pk.kind == FamilyKind.NTCF:
        q, m, A, As = pk.params
        v = decode_vector(x, m, q)
        if v is None:
            raise ValueError("x is not a valid domain element")
        Ax = _matmul_mod(A, v, q)
        return encode_vector([(u + b * t) % q for u, t in zip(Ax, As)], q)
    q, m, M = pk.params
    v = decode_vector(x, m, q)
    if v is None:
        raise ValueError("x is not a valid domain element")
    return encode_vector(_matmul_mod(M, list(v) + [b], q), q)


def _toylwe_inv(sk: SecretKey, y: int):
    """(b, x) for NTIF, (x0, x1) for NTCF, or None."""
    if sk.kind == FamilyKind.NTCF:
        q, m, Ainv, s = sk.params
        v = decode_vector(y, m, q)
        if v is None:
            return None
        x0 = _matmul_mod(Ainv, v, q)
        x1 = tuple((a - c) % q for a, c in zip(x0, s))
        return encode_vector(x0, q), encode_vector(x1, q)
    q, m, Minv = sk.params
    v = decode_vector(y, m + 1, q)
    if v is None:
        return None
    z = _matmul_mod(Minv, v, q)
    if z[-1] not in (0, 1):
        return None
    return z[-1], encode_vector(z[:-1], q)


# ---------------------------------------------------------------------------
# public scalar API
# ---------------------------------------------------------------------------

BACKENDS = ("mock", "toylwe")


def gen(kind: FamilyKind, lam: int, rng: np.random.Generator, backend: str = "mock") -> KeyPair:
    kind = FamilyKind(kind)
    if backend == "mock":
        return _mock_gen(kind, int(lam), rng)
    if backend == "toylwe":
        return _toylwe_gen(kind, int(lam), rng)
    raise UnsupportedParameters(f"unknown backend {backend!r}")


def gen_for_bases(lam: int, h: Sequence[int], rng: np.random.Generator, backend: str = "mock") -> list[KeyPair]:
    return [gen(FamilyKind(int(bit)), lam, rng, backend) for bit in h]


def in_domain(pk: PublicKey, x: int) -> bool:
    if not 0 <= x < (1 << pk.w):
        return False
    if pk.backend == "toylwe":
        return decode_vector(x, pk.params[1], pk.params[0]) is not None
    return True


def sample_domain(pk: PublicKey, rng: np.random.Generator) -> int:
    if pk.backend == "toylwe":
        q, m = pk.params[0], pk.params[1]
        return encode_vector(rng.integers(0, q, size=m).tolist(), q)
    return int(rng.integers(0, 1 << pk.w))


def eval(pk: PublicKey, b: int, x: int) -> int:  # noqa: A001 - mirrors the family interface
    b, x = int(b), int(x)
    if b not in (0, 1) or not in_domain(pk, x):
        raise ValueError("(b, x) outside the domain")
    if pk.backend == "mock":
        return _mock_eval(pk, b, x)
    if pk.backend == "toylwe":
        return _toylwe_eval(pk, b, x)
    raise KeyFormatError(f"malformed public key backend {pk.backend!r}")


def chk(pk: PublicKey, b: int, x: int, y: int) -> bool:
    try:
        return eval(pk, b, x) == int(y)
    except (ValueError, TypeError):
        return False


def inv_ntif(sk: SecretKey, y: int) -> tuple[int, int] | None:
    if sk.kind != FamilyKind.NTIF:
        raise KeyFormatError("inv_ntif needs an injective-family key")
    if sk.backend == "toylwe":
        return _toylwe_inv(sk, int(y))
    z = _mock_preimage(sk, int(y))
    if z is None:
        return None
    return z >> sk.w, z & ((1 << sk.w) - 1)


def claw(sk: SecretKey, y: int) -> tuple[int, int] | None:
    if sk.kind != FamilyKind.NTCF:
        raise KeyFormatError("claw needs a claw-free-family key")
    if sk.backend == "toylwe":
        return _toylwe_inv(sk, int(y))
    z = _mock_preimage(sk, int(y))
    if z is None:
        return None
    return z, z ^ sk.params[2]


def inv_ntcf(sk: SecretKey, b: int, y: int) -> int | None:
    pair = claw(sk, y)
    return None if pair is None else pair[int(b)]


# ---------------------------------------------------------------------------
# batched keys
# ---------------------------------------------------------------------------


@dataclass
class MockArrays:
    """Structure-of-arrays form of mock keys sharing one domain width."""

    w: int
    kinds: np.ndarray
    mul: np.ndarray
    add: np.ndarray
    delta: np.ndarray
    inv: np.ndarray | None = None

    def take(self, idx) -> "MockArrays":
        inv = None if self.inv is None else self.inv[idx]
        return MockArrays(self.w, self.kinds[idx], self.mul[idx], self.add[idx], self.delta[idx], inv)


def _odd_inverse_vec(a: np.ndarray, bits: int) -> np.ndarray:
    # Newton iteration for inverses modulo 2^64, then reduce
    x = a.copy()
    for _ in range(6):
        x = x * (np.uint64(2) - a * x)
    return x & np.uint64((1 << bits) - 1)


def mock_gen_batch(kinds, w: int, rng: np.random.Generator) -> "KeyArray":
    """Generate one mock key per entry of ``kinds`` in a single vectorized pass."""
    lo, hi = MOCK_W_RANGE
    if not lo <= w <= hi:
        raise UnsupportedParameters(f"mock backend supports w in [{lo}, {hi}], got {w}")
    kinds = np.asarray(kinds, dtype=np.int64)
    N = kinds.shape[0]
    bits, _, _ = _mock_geometry(w)
    mul = rng.integers(0, 1 << (bits - 1), size=(N, 3), dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    add = rng.integers(0, 1 << bits, size=(N, 3), dtype=np.uint64)
    delta = rng.integers(1, 1 << w, size=N, dtype=np.uint64)
    delta = np.where(kinds == FamilyKind.NTCF, delta, np.uint64(0))
    return KeyArray(mock=MockArrays(w, kinds, mul, add, delta, _odd_inverse_vec(mul, bits)))


_MOCK_WORDS = 16
_MOCK_FRAME = np.dtype([("size", ">u4"), ("tag", "S4"), ("kind", "u1"), ("w", ">u2"), ("count", ">u4"),
                        ("words", ">i8", (_MOCK_WORDS,))])


def _mock_frames(m: MockArrays, first: np.ndarray) -> bytes:
    """Byte-identical batch form of the per-key frames for ``(first, add, delta)`` parameter tuples."""
    N = m.kinds.shape[0]
    rec = np.zeros(N, dtype=_MOCK_FRAME)
    rec["size"] = _MOCK_FRAME.itemsize - 4
    rec["tag"] = _TAGS["mock"]
    rec["kind"] = m.kinds
    rec["w"] = m.w
    rec["count"] = _MOCK_WORDS
    words = np.full((N, _MOCK_WORDS), -1, dtype=np.int64)
    words[:, 0] = words[:, 7] = 3
    words[:, 2:7:2] = first.astype(np.int64)
    words[:, 9:14:2] = m.add.astype(np.int64)
    words[:, 15] = m.delta.astype(np.int64)
    rec["words"] = words
    return rec.tobytes()


class KeyArray:
    """A flat list of keys with vectorized evaluation and decoding.

    Mock keys with a common width live in numpy arrays; anything else is kept
    as key objects and processed with per-key loops.  ``public()`` drops every
    secret component, and only that view is handed to classical provers.
    """

    def __init__(self, pks: Sequence[PublicKey] | None = None, sks: Sequence[SecretKey] | None = None,
                 *, mock: MockArrays | None = None):
        self._mock = mock
        self._pks = None if pks is None else list(pks)
        self._sks = None if sks is None else list(sks)
        if mock is None and self._pks is not None:
            self._mock = _try_mock_arrays(self._pks, self._sks)
        if self._mock is None and self._pks is None:
            raise KeyFormatError("empty key array description")
        if self._sks is not None and len(self._sks) != len(self):
            raise KeyFormatError("public and secret key counts differ")
        if self._mock is not None:
            self.backend, self.uniform_w = "mock", self._mock.w
        elif self._pks:
            backends = {pk.backend for pk in self._pks}
            if len(backends) > 1:
                raise KeyFormatError("mixed backends in one key array")
            ws = {pk.w for pk in self._pks}
            self.backend = backends.pop()
            self.uniform_w = ws.pop() if len(ws) == 1 else None
        else:
            self.backend, self.uniform_w = "mock", None

    @classmethod
    def from_keypairs(cls, pairs: Sequence[KeyPair]) -> "KeyArray":
        return cls([p.pk for p in pairs], [p.sk for p in pairs])

    def __len__(self) -> int:
        return self._mock.kinds.shape[0] if self._mock is not None else len(self._pks)

    @property
    def has_secrets(self) -> bool:
        if self._mock is not None:
            return self._mock.inv is not None
        return self._sks is not None

    @property
    def pks(self) -> list[PublicKey]:
        if self._pks is None:
            m = self._mock
            self._pks = [
                PublicKey("mock", FamilyKind(int(k)), m.w,
                          (tuple(int(v) for v in mu), tuple(int(v) for v in ad), int(de)))
                for k, mu, ad, de in zip(m.kinds, m.mul, m.add, m.delta)
            ]
        return self._pks

    @property
    def sks(self) -> list[SecretKey]:
        if not self.has_secrets:
            raise PermissionError("public key array has no secret keys")
        if self._sks is None:
            m = self._mock
            self._sks = [
                SecretKey("mock", FamilyKind(int(k)), m.w,
                          (tuple(int(v) for v in iv), tuple(int(v) for v in ad), int(de)))
                for k, iv, ad, de in zip(m.kinds, m.inv, m.add, m.delta)
            ]
        return self._sks

    def __getitem__(self, i: int) -> KeyPair:
        return KeyPair(self.pks[i], self.sks[i])

    def public(self) -> "KeyArray":
        if self._mock is not None:
            m = self._mock
            return KeyArray(mock=MockArrays(m.w, m.kinds, m.mul, m.add, m.delta, None))
        return KeyArray(list(self._pks), None)

    def take(self, idx) -> "KeyArray":
        idx = np.asarray(idx, dtype=np.int64).ravel()
        if self._mock is not None:
            return KeyArray(mock=self._mock.take(idx))
        sks = None if self._sks is None else [self._sks[i] for i in idx]
        return KeyArray([self._pks[i] for i in idx], sks)

    def tile(self, reps: int) -> "KeyArray":
        return self.take(np.tile(np.arange(len(self)), reps))

    @property
    def kinds(self) -> np.ndarray:
        if self._mock is not None:
            return self._mock.kinds
        return np.array([int(pk.kind) for pk in self._pks], dtype=np.int64)

    def to_bytes(self) -> bytes:
        if self._mock is not None:
            return _mock_frames(self._mock, self._mock.mul)
        return b"".join(struct.pack(">I", len(b)) + b for b in (pk.to_bytes() for pk in self.pks))

    def secret_bytes(self) -> bytes:
        if self._mock is not None:
            if self._mock.inv is None:
                raise PermissionError("public key array has no secret keys")
            return _mock_frames(self._mock, self._mock.inv)
        return b"".join(struct.pack(">I", len(b)) + b for b in (sk.to_bytes() for sk in self.sks))

    @classmethod
    def from_bytes(cls, public: bytes, secret: bytes | None = None) -> "KeyArray":
        pks = [public_key_from_bytes(b) for b in _split_frames(public)]
        sks = None if secret is None else [secret_key_from_bytes(b) for b in _split_frames(secret)]
        return cls(pks, sks)

    def digest(self) -> bytes:
        return hashlib.sha256(b"CVQC-PK-v1" + self.to_bytes()).digest()

    # -- vectorized operations ------------------------------------------------

    def sample_domain(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """One uniform domain element per key (or ``size`` draws per key, shape (size, N))."""
        shape = (len(self),) if size is None else (size, len(self))
        if self._mock is not None:
            return rng.integers(0, 1 << self.uniform_w, size=shape, dtype=np.uint64)
        if size is None:
            return np.array([sample_domain(pk, rng) for pk in self.pks], dtype=np.uint64)
        return np.array([[sample_domain(pk, rng) for pk in self.pks] for _ in range(size)], dtype=np.uint64)

    def sample_nonzero(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform nonzero ``w``-bit strings, one per key."""
        if self.uniform_w is not None:
            return rng.integers(1, 1 << self.uniform_w, size=len(self), dtype=np.uint64)
        return np.array([int(rng.integers(1, 1 << pk.w)) for pk in self.pks], dtype=np.uint64)

    def eval(self, b, x) -> np.ndarray:
        b = np.asarray(b, dtype=np.uint64)
        x = np.asarray(x, dtype=np.uint64)
        m = self._mock
        if m is not None:
            w = np.uint64(m.w)
            _, mask, shift = _mock_geometry(m.w)
            pad = np.uint64(PAD_BITS)
            z = np.where(m.kinds == FamilyKind.NTCF, (x ^ (b * m.delta)) << pad, ((b << w) | x) << pad)
            return _mix(z, m.mul.T, m.add.T, np.uint64(mask), np.uint64(shift))
        return np.array([eval(pk, int(bb), int(xx)) for pk, bb, xx in zip(self.pks, b, x)], dtype=np.uint64)

    def chk(self, b, x, y) -> np.ndarray:
        if self._mock is not None:
            b = np.asarray(b, dtype=np.int64)
            x = np.asarray(x, dtype=np.uint64)
            ok = (b >= 0) & (b <= 1) & ((x >> np.uint64(self.uniform_w)) == 0)
            bb = np.where(ok, b, 0).astype(np.uint64)
            xx = np.where(ok, x, np.uint64(0))
            return ok & (self.eval(bb, xx) == np.asarray(y, dtype=np.uint64))
        return np.array([chk(pk, int(bb), int(xx), int(yy)) for pk, bb, xx, yy in zip(self.pks, b, x, y)],
                        dtype=bool)

    def decode(self, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Trapdoor decoding of images.

        Returns ``(ok, first, second)``: for NTIF keys ``(b, x_b)``, for NTCF
        keys the claw ``(x0, x1)``.  ``ok`` is False where the image has no
        preimage (or no claw).
        """
        if not self.has_secrets:
            raise PermissionError("decoding needs secret keys")
        y = np.asarray(y, dtype=np.uint64)
        m = self._mock
        if m is not None:
            w = m.w
            bits, mask, shift = _mock_geometry(w)
            in_range = (y >> np.uint64(bits)) == 0
            z = _unmix(y & np.uint64(mask), m.inv.T, m.add.T, np.uint64(mask), np.uint64(shift), bits)
            ok = in_range & ((z & np.uint64(_MASK_PAD)) == 0)
            z = z >> np.uint64(PAD_BITS)
            ntcf = m.kinds == FamilyKind.NTCF
            ok &= ~ntcf | ((z >> np.uint64(w)) == 0)
            low = z & np.uint64((1 << w) - 1)
            first = np.where(ntcf, low, z >> np.uint64(w))
            second = np.where(ntcf, low ^ m.delta, low)
            return ok, first, second
        ok = np.zeros(len(self), dtype=bool)
        first = np.zeros(len(self), dtype=np.uint64)
        second = np.zeros(len(self), dtype=np.uint64)
        for i, (sk, yy) in enumerate(zip(self.sks, y)):
            res = claw(sk, int(yy)) if sk.kind == FamilyKind.NTCF else inv_ntif(sk, int(yy))
            if res is not None:
                ok[i] = True
                first[i], second[i] = res
        return ok, first, second


def _split_frames(data: bytes) -> list[bytes]:
    out, pos = [], 0
    while pos < len(data):
        (size,) = struct.unpack(">I", data[pos:pos + 4])
        out.append(data[pos + 4:pos + 4 + size])
        pos += 4 + size
    if pos != len(data):
        raise KeyFormatError("truncated key array")
    return out


def _try_mock_arrays(pks: list[PublicKey], sks: list[SecretKey] | None) -> MockArrays | None:
    if not pks or any(pk.backend != "mock" for pk in pks) or len({pk.w for pk in pks}) != 1:
        return None
    kinds = np.array([int(pk.kind) for pk in pks], dtype=np.int64)
    mul = np.array([pk.params[0] for pk in pks], dtype=np.uint64).reshape(-1, 3)
    add = np.array([pk.params[1] for pk in pks], dtype=np.uint64).reshape(-1, 3)
    delta = np.array([pk.params[2] for pk in pks], dtype=np.uint64)
    inv = None
    if sks is not None:
        inv = np.array([sk.params[0] for sk in sks], dtype=np.uint64).reshape(-1, 3)
    return MockArrays(pks[0].w, kinds, mul, add, delta, inv)


def keys_for_bases(lam: int, h: Sequence[int], rng: np.random.Generator, backend: str = "mock") -> KeyArray:
    """Keys matching basis bits ``h`` (NTIF for 0, NTCF for 1) as a batched array."""
    if backend == "mock":
        return mock_gen_batch(h, int(lam), rng)
    return KeyArray.from_keypairs(gen_for_bases(lam, h, rng, backend))


def parity(v: np.ndarray) -> np.ndarray:
    """Bitwise parity of each uint64 entry."""
    v = np.asarray(v, dtype=np.uint64)
    for shift in (32, 16, 8, 4, 2, 1):
        v = v ^ (v >> np.uint64(shift))
    return (v & np.uint64(1)).astype(np.int64)
