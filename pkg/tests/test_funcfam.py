from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvqc import funcfam
from cvqc.funcfam import (FamilyKind, KeyArray, KeyFormatError, UnsupportedParameters, chk, claw, decode_vector,
                          encode_vector, gen, gen_for_bases, inv_ntcf, inv_ntif, keys_for_bases, parity,
                          public_key_from_bytes, secret_key_from_bytes, toylwe_ntcf_from_matrix)

W = 8


@pytest.fixture(scope="module")
def ntif():
    return gen(FamilyKind.NTIF, W, np.random.default_rng(1))


@pytest.fixture(scope="module")
def ntcf():
    return gen(FamilyKind.NTCF, W, np.random.default_rng(2))


def test_gen_deterministic():
    a = gen(FamilyKind.NTIF, 8, np.random.default_rng(1))
    b = gen(FamilyKind.NTIF, 8, np.random.default_rng(1))
    assert a == b
    assert a.pk.to_bytes() == b.pk.to_bytes()


def test_unsupported_parameters():
    with pytest.raises(UnsupportedParameters):
        gen(FamilyKind.NTIF, 40, np.random.default_rng(0))
    with pytest.raises(UnsupportedParameters):
        gen(FamilyKind.NTIF, 2, np.random.default_rng(0), backend="toylwe")
    with pytest.raises(UnsupportedParameters):
        gen(FamilyKind.NTIF, 8, np.random.default_rng(0), backend="nope")


def test_ntif_exhaustive_injective_and_inverse(ntif):
    images = {}
    for b in (0, 1):
        for x in range(1 << W):
            y = funcfam.eval(ntif.pk, b, x)
            assert y not in images
            images[y] = (b, x)
            assert inv_ntif(ntif.sk, y) == (b, x)
    assert len(images) == 2 << W


def test_ntcf_exhaustive_claws(ntcf):
    delta = ntcf.sk.params[2]
    seen = set()
    for x in range(1 << W):
        y = funcfam.eval(ntcf.pk, 0, x)
        x0, x1 = claw(ntcf.sk, y)
        assert (x0, x1) == (x, x ^ delta)
        assert funcfam.eval(ntcf.pk, 1, x1) == y
        assert inv_ntcf(ntcf.sk, 1, y) == x1
        seen.add(y)
    # perfect matching: the b=1 images are exactly the b=0 images
    assert {funcfam.eval(ntcf.pk, 1, x) for x in range(1 << W)} == seen


def test_chk_round_trip_and_wrong_image(ntif, ntcf):
    rng = np.random.default_rng(3)
    for kp in (ntif, ntcf):
        for _ in range(1000):
            b, x = int(rng.integers(0, 2)), int(rng.integers(0, 1 << W))
            y = funcfam.eval(kp.pk, b, x)
            assert chk(kp.pk, b, x, y)
            assert not chk(kp.pk, b, x, y ^ 1)
    assert not chk(ntif.pk, 2, 0, 0)
    assert not chk(ntif.pk, 0, 1 << W, 0)


def test_non_images_rejected(ntif, ntcf):
    # the mock range is sparse: most integers have no preimage
    rng = np.random.default_rng(4)
    ys = rng.integers(0, 1 << (W + 9), size=2000)
    images = {funcfam.eval(ntif.pk, b, x) for b in (0, 1) for x in range(1 << W)}
    misses = [int(y) for y in ys if int(y) not in images]
    assert misses
    assert all(inv_ntif(ntif.sk, y) is None for y in misses)
    assert inv_ntif(ntif.sk, 1 << 40) is None
    claw_images = {funcfam.eval(ntcf.pk, 0, x) for x in range(1 << W)}
    assert all(claw(ntcf.sk, int(y)) is None for y in ys if int(y) not in claw_images)


def test_kind_mismatch_raises(ntif, ntcf):
    with pytest.raises(KeyFormatError):
        claw(ntif.sk, 0)
    with pytest.raises(KeyFormatError):
        inv_ntif(ntcf.sk, 0)


@pytest.mark.parametrize("w", [2, 5, 10])
def test_small_widths_exhaustive(w):
    rng = np.random.default_rng(w)
    kp = gen(FamilyKind.NTCF, w, rng)
    pairs = set()
    for x in range(1 << w):
        pair = claw(kp.sk, funcfam.eval(kp.pk, 0, x))
        pairs.add(frozenset(pair))
    assert len(pairs) == 1 << (w - 1)
    kp = gen(FamilyKind.NTIF, w, rng)
    assert len({funcfam.eval(kp.pk, b, x) for b in (0, 1) for x in range(1 << w)}) == 2 << w


def test_toylwe_worked_example():
    kp = toylwe_ntcf_from_matrix([[1, 0], [0, 1]], (1, 2), 5)
    x = encode_vector((2, 2), 5)
    y = funcfam.eval(kp.pk, 1, x)
    assert decode_vector(y, 2, 5) == (3, 4)
    x0, x1 = claw(kp.sk, y)
    assert decode_vector(x0, 2, 5) == (3, 4)
    assert decode_vector(x1, 2, 5) == (2, 2)
    # brute force over Z_5^2 finds the same claw and nothing else
    hits = [(b, v) for b in (0, 1) for v in np.ndindex(5, 5) if funcfam.eval(kp.pk, b, encode_vector(v, 5)) == y]
    assert hits == [(0, (3, 4)), (1, (2, 2))]


@pytest.mark.parametrize("kind", [FamilyKind.NTIF, FamilyKind.NTCF])
def test_toylwe_exhaustive(kind):
    kp = gen(kind, 4, np.random.default_rng(8), backend="toylwe")
    q, m = kp.pk.params[0], kp.pk.params[1]
    domain = [encode_vector(v, q) for v in np.ndindex(*(q,) * m)]
    for x in domain:
        for b in (0, 1):
            y = funcfam.eval(kp.pk, b, x)
            if kind == FamilyKind.NTIF:
                assert inv_ntif(kp.sk, y) == (b, x)
            else:
                assert inv_ntcf(kp.sk, b, y) == x
    # a digit equal to q is outside Z_q
    assert not funcfam.in_domain(kp.pk, q)
    with pytest.raises(ValueError):
        funcfam.eval(kp.pk, 0, q)


def test_toylwe_rejects_zero_shift():
    with pytest.raises(UnsupportedParameters):
        toylwe_ntcf_from_matrix([[1, 0], [0, 1]], (0, 0), 5)


@pytest.mark.parametrize("backend,lam", [("mock", 8), ("toylwe", 8)])
def test_key_serialization_round_trip(backend, lam):
    rng = np.random.default_rng(5)
    for kind in FamilyKind:
        kp = gen(kind, lam, rng, backend)
        assert public_key_from_bytes(kp.pk.to_bytes()) == kp.pk
        assert secret_key_from_bytes(kp.sk.to_bytes()) == kp.sk


def test_gen_for_bases():
    rng = np.random.default_rng(6)
    assert [kp.kind for kp in gen_for_bases(8, [0, 1], rng)] == [FamilyKind.NTIF, FamilyKind.NTCF]
    assert gen_for_bases(8, [], rng) == []
    h = rng.integers(0, 2, size=100)
    assert [int(kp.kind) for kp in gen_for_bases(8, h, rng)] == h.tolist()
    assert keys_for_bases(8, h, rng).kinds.tolist() == h.tolist()


# --- batched keys ---------------------------------------------------------


@pytest.fixture(scope="module")
def batch():
    rng = np.random.default_rng(9)
    return keys_for_bases(8, rng.integers(0, 2, size=64), rng)


def test_batch_matches_scalar(batch):
    rng = np.random.default_rng(10)
    b = rng.integers(0, 2, size=len(batch))
    x = batch.sample_domain(rng)
    y = batch.eval(b, x)
    for i in range(len(batch)):
        kp = batch[i]
        assert int(y[i]) == funcfam.eval(kp.pk, int(b[i]), int(x[i]))
    assert batch.chk(b, x, y).all()
    assert not batch.chk(b, x, y ^ np.uint64(1)).any()
    ok, first, second = batch.decode(y)
    assert ok.all()
    ntcf = batch.kinds == 1
    assert np.array_equal(np.where(ntcf, np.where(b == 0, first, second), second), x)
    assert np.array_equal(first[~ntcf], b[~ntcf].astype(np.uint64))


def test_batch_bytes_round_trip(batch):
    back = KeyArray.from_bytes(batch.to_bytes(), batch.secret_bytes())
    assert back.to_bytes() == batch.to_bytes()
    assert back.secret_bytes() == batch.secret_bytes()
    per_key = KeyArray([kp.pk for kp in (batch[i] for i in range(len(batch)))])
    assert per_key.digest() == batch.digest()


def test_public_view_has_no_secrets(batch):
    pub = batch.public()
    assert not pub.has_secrets
    with pytest.raises(PermissionError):
        pub.decode(np.zeros(len(pub), dtype=np.uint64))
    with pytest.raises(PermissionError):
        pub.secret_bytes()
    with pytest.raises(PermissionError):
        pub.sks


def test_toylwe_batch_paths():
    rng = np.random.default_rng(12)
    keys = keys_for_bases(8, [0, 1, 1, 0], rng, backend="toylwe")
    b = np.array([1, 0, 1, 0])
    x = keys.sample_domain(rng)
    y = keys.eval(b, x)
    assert keys.chk(b, x, y).all()
    ok, first, second = keys.decode(y)
    assert ok.all()


@given(st.integers(0, 2**64 - 1))
def test_parity_matches_popcount(v):
    assert int(parity(np.array([v], dtype=np.uint64))[0]) == bin(v).count("1") % 2
