"""Zero-knowledge variant: commitments, pluggable FHE/NIZK backends, prover, verifier, simulator.

Message flow of one session::

    setup      st_V = (crs, sk, s, hsk, hpk, xi)      st_P = (crs, pk, hpk, Enc(sk), Enc(s), beta, gamma, r1)
    prover  -> y                       commit to the padded witness X^beta Z^gamma |psi>
    verifier-> c
    prover  -> chi = commit(u; r2),    ce = Eval_hpk(NIZK.P, crs, Enc(sk), Enc(s), public part, tau)
    verifier   NIZK.V(crs, x, Dec_hsk(ce))

with ``xi = commit(beta, gamma; r1)``, instance ``x = (H, s, sk, xi, y, c, chi)``
and witness ``tau = (beta, gamma, u, r1, r2)``.  The relation is
``verdict_prime``: both openings verify and the padded verdict accepts.

The shipped backends are placeholders with the right interfaces:
``TransparentFHE`` keeps plaintexts inside key-tagged envelopes and
``ToyNIZK`` proofs are hash tags that are complete and simulatable but not
sound.  Soundness of the composed protocol is therefore exercised in
``protocol``, before compilation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .encoding import join_fields, lp, sha256, u8_bytes, u8_from_bytes, u64_bytes, u64_from_bytes
from .fiatshamir import RandomOracle, derive_challenge
from .funcfam import FamilyKind, KeyArray, keys_for_bases, parity
from .hamiltonian import ZXHamiltonian, sample_term_indices, term_arrays
from .protocol import (HonestProver, Params, PublicView, _check_params, instance_digest, sample_term_strings,
                       verdict)

COMMIT_TAG = b"CVQC-COM-v1"
NIZK_TAG = b"CVQC-NIZK-v1"
ZK_SETUP_TAG = b"CVQC-ZKSETUP-v1"
RANDOMNESS_BYTES = 32


# ---------------------------------------------------------------------------
# commitments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Commitment:
    value: bytes


def commit_msg(m: bytes, r: bytes) -> Commitment:
    if len(r) != RANDOMNESS_BYTES:
        raise ValueError(f"commitment randomness must be {RANDOMNESS_BYTES} bytes")
    return Commitment(sha256(COMMIT_TAG + r + m))


def verify_commit(cmt: Commitment, m: bytes, r: bytes) -> bool:
    try:
        return commit_msg(m, r).value == cmt.value
    except (ValueError, TypeError):
        return False


def random_bytes(rng: np.random.Generator, size: int = RANDOMNESS_BYTES) -> bytes:
    return rng.bytes(size)


def pads_message(beta, gamma) -> bytes:
    return lp(u8_bytes(beta)) + lp(u8_bytes(gamma))


def response_message(w, t) -> bytes:
    return lp(u8_bytes(np.clip(w, 0, 255))) + lp(u64_bytes(t))


# ---------------------------------------------------------------------------
# FHE backend
# ---------------------------------------------------------------------------


class DecryptionError(ValueError):
    pass


@dataclass(frozen=True)
class Ciphertext:
    key_tag: bytes
    nonce: bytes
    _payload: object = field(repr=False, compare=False)


class TransparentFHE:
    """Key-tagged identity encoding with the Gen/Enc/Dec/Eval interface.

    Functionally correct, intentionally insecure: the payload is stored in
    the clear.  Circuit privacy is a documented contract of the interface
    that this backend does not provide.
    """

    name = "transparent"

    @staticmethod
    def _tag(hsk: bytes) -> bytes:
        return sha256(b"CVQC-FHE-pk" + hsk)[:16]

    def keygen(self, rng: np.random.Generator) -> tuple[bytes, bytes]:
        hsk = random_bytes(rng, 16)
        return self._tag(hsk), hsk

    def enc(self, hpk: bytes, m, rng: np.random.Generator) -> Ciphertext:
        return Ciphertext(hpk, random_bytes(rng, 16), m)

    def dec(self, hsk: bytes, ct: Ciphertext):
        if not isinstance(ct, Ciphertext) or ct.key_tag != self._tag(hsk):
            raise DecryptionError("ciphertext is not under this key")
        return ct._payload

    def eval(self, hpk: bytes, circuit: Callable, cts, rng: np.random.Generator) -> Ciphertext:
        if any(ct.key_tag != hpk for ct in cts):
            raise DecryptionError("evaluation inputs are under different keys")
        return self.enc(hpk, circuit(*(ct._payload for ct in cts)), rng)


# ---------------------------------------------------------------------------
# language L and the NIZK backend
# ---------------------------------------------------------------------------


@dataclass
class LInstance:
    H: ZXHamiltonian
    s: np.ndarray
    keys: KeyArray
    xi: Commitment
    y: np.ndarray
    c: np.ndarray
    chi: Commitment

    def canonical_bytes(self) -> bytes:
        return join_fields(b"CVQC-L-v1", (
            self.H.canonical_bytes(), u64_bytes(self.s), self.keys.to_bytes(), self.keys.secret_bytes(),
            self.xi.value, u64_bytes(self.y), u8_bytes(self.c), self.chi.value,
        ))

    def digest(self) -> bytes:
        return sha256(self.canonical_bytes())


@dataclass
class LWitness:
    beta: np.ndarray
    gamma: np.ndarray
    w: np.ndarray
    t: np.ndarray
    r1: bytes
    r2: bytes


def verdict_prime(x: LInstance, tau: LWitness) -> bool:
    """Relation of L: both openings verify and the pad-conjugated verdict accepts."""
    try:
        if not verify_commit(x.xi, pads_message(tau.beta, tau.gamma), tau.r1):
            return False
        if not verify_commit(x.chi, response_message(tau.w, tau.t), tau.r2):
            return False
        return verdict(x.H, x.s, x.keys, x.y, x.c, (tau.w, tau.t), pads=(tau.beta, tau.gamma))
    except (ValueError, TypeError):
        return False


class ToyNIZK:
    """Hash-tag proofs: ``P`` emits ``tag(crs, x)`` only when the relation holds.

    Complete and zero-knowledge (``S`` outputs the same tag), but not sound:
    anyone can compute the tag.
    """

    name = "toy"

    def __init__(self, relation: Callable = verdict_prime):
        self.relation = relation

    def setup(self, rng: np.random.Generator) -> bytes:
        return random_bytes(rng)

    @staticmethod
    def _tag(crs: bytes, x: LInstance) -> bytes:
        return sha256(join_fields(NIZK_TAG, (crs, x.digest())))

    def prove(self, crs: bytes, x: LInstance, tau: LWitness) -> bytes | None:
        return self._tag(crs, x) if self.relation(x, tau) else None

    def verify(self, crs: bytes, x: LInstance, proof) -> bool:
        return isinstance(proof, bytes) and proof == self._tag(crs, x)

    def simulate(self, crs: bytes, x: LInstance) -> bytes:
        return self._tag(crs, x)


FHE_BACKENDS = {"transparent": TransparentFHE}
NIZK_BACKENDS = {"toy": ToyNIZK}


# ---------------------------------------------------------------------------
# setup
# ---------------------------------------------------------------------------


@dataclass
class VerifierState:
    params: Params
    crs: bytes
    keys: KeyArray
    s: np.ndarray
    hsk: bytes
    hpk: bytes
    xi: Commitment


@dataclass
class ProverState:
    """Everything the prover holds; secrets appear only as ciphertexts."""

    params: Params
    crs: bytes
    pk: KeyArray
    hpk: bytes
    csk: Ciphertext
    cs: Ciphertext
    beta: np.ndarray
    gamma: np.ndarray
    r1: bytes


@dataclass
class ZkSetup:
    st_V: VerifierState
    st_P: ProverState


def setup_zk(lam: int, n: int, r: int, k: int, rng: np.random.Generator, fhe=None, nizk=None,
             backend: str = "mock") -> ZkSetup:
    """Trusted setup for ``N = n*r*k`` qubits and ``M = r*k`` term strings."""
    fhe = fhe or TransparentFHE()
    nizk = nizk or ToyNIZK()
    params = _check_params(lam, n, r, k, backend)
    crs = nizk.setup(rng)
    h = rng.integers(0, 2, size=params.qubits)
    keys = keys_for_bases(lam, h, rng, backend)
    hpk, hsk = fhe.keygen(rng)
    csk = fhe.enc(hpk, keys, rng)
    beta = rng.integers(0, 2, size=params.qubits)
    gamma = rng.integers(0, 2, size=params.qubits)
    r1 = random_bytes(rng)
    xi = commit_msg(pads_message(beta, gamma), r1)
    s = sample_term_strings(params.copies, rng)
    cs = fhe.enc(hpk, s, rng)
    st_V = VerifierState(params, crs, keys, s, hsk, hpk, xi)
    st_P = ProverState(params, crs, keys.public(), hpk, csk, cs, beta, gamma, r1)
    return ZkSetup(st_V, st_P)


def refresh_pads(zs: ZkSetup, rng: np.random.Generator) -> ZkSetup:
    """Same keys and term strings, fresh one-time pads and pad commitment."""
    N = zs.st_V.params.qubits
    beta = rng.integers(0, 2, size=N)
    gamma = rng.integers(0, 2, size=N)
    r1 = random_bytes(rng)
    xi = commit_msg(pads_message(beta, gamma), r1)
    return ZkSetup(replace(zs.st_V, xi=xi), replace(zs.st_P, beta=beta, gamma=gamma, r1=r1))


def zk_setup_digest(crs: bytes, pk: KeyArray, hpk: bytes) -> bytes:
    return sha256(join_fields(ZK_SETUP_TAG, (crs, pk.digest(), hpk)))


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------


@dataclass
class ZkTranscript:
    xi: Commitment
    y: np.ndarray
    c: np.ndarray
    chi: Commitment
    ce: Ciphertext
    mode: str = "zk"
    tau: LWitness | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        payload = self.ce._payload
        return {
            "mode": self.mode,
            "xi": self.xi.value.hex(),
            "y": u64_bytes(self.y).hex(),
            "c": u8_bytes(self.c).hex(),
            "chi": self.chi.value.hex(),
            "ce": {
                "key_tag": self.ce.key_tag.hex(),
                "nonce": self.ce.nonce.hex(),
                "payload": payload.hex() if isinstance(payload, bytes) else None,
            },
            "digest": self.digest().hex(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ZkTranscript":
        ce = data["ce"]
        payload = bytes.fromhex(ce["payload"]) if ce.get("payload") is not None else None
        return cls(
            Commitment(bytes.fromhex(data["xi"])),
            u64_from_bytes(bytes.fromhex(data["y"])),
            u8_from_bytes(bytes.fromhex(data["c"])),
            Commitment(bytes.fromhex(data["chi"])),
            Ciphertext(bytes.fromhex(ce["key_tag"]), bytes.fromhex(ce["nonce"]), payload),
            data.get("mode", "zk"),
        )

    def digest(self) -> bytes:
        payload = self.ce._payload if isinstance(self.ce._payload, bytes) else b""
        return sha256(join_fields(b"CVQC-ZKTR-v1", (
            self.mode.encode(), self.xi.value, u64_bytes(self.y), u8_bytes(self.c), self.chi.value,
            self.ce.key_tag, self.ce.nonce, payload,
        )))


class ProverAbort(RuntimeError):
    pass


def _check_public_keys(st_P: ProverState) -> None:
    p = st_P.params
    if len(st_P.pk) != p.qubits or st_P.pk.has_secrets:
        raise ProverAbort("public key list is invalid")
    if not np.all((st_P.pk.kinds == FamilyKind.NTIF) | (st_P.pk.kinds == FamilyKind.NTCF)):
        raise ProverAbort("public key list is invalid")


ChallengeSource = Callable[[Commitment, np.ndarray], np.ndarray]


def uniform_challenges(k: int, rng: np.random.Generator) -> ChallengeSource:
    return lambda xi, y: rng.integers(0, 2, size=k)


def zk_prove(H: ZXHamiltonian, st_P: ProverState, device: KeyArray, challenge: ChallengeSource,
             rng: np.random.Generator, fhe=None, nizk=None, state: np.ndarray | None = None) -> ZkTranscript:
    """Honest zero-knowledge prover holding ``st_P`` and a quantum device."""
    fhe = fhe or TransparentFHE()
    nizk = nizk or ToyNIZK()
    _check_public_keys(st_P)
    p = st_P.params
    xi = commit_msg(pads_message(st_P.beta, st_P.gamma), st_P.r1)
    prover = HonestProver(state, beta=st_P.beta, gamma=st_P.gamma)
    view = PublicView(H, st_P.pk, p.n, p.r, p.k)
    y = prover.commit(view, rng, device=device)
    c = np.asarray(challenge(xi, y), dtype=np.int64)
    w, t = prover.respond(c, rng)
    r2 = random_bytes(rng)
    chi = commit_msg(response_message(w, t), r2)
    tau = LWitness(st_P.beta, st_P.gamma, w, t, st_P.r1, r2)

    def circuit(crs, keys, s, public, witness):
        x = LInstance(public[0], s, keys, *public[1:])
        return nizk.prove(crs, x, witness)

    hpk = st_P.hpk
    inputs = [fhe.enc(hpk, st_P.crs, rng), st_P.csk, st_P.cs, fhe.enc(hpk, (H, xi, y, c, chi), rng),
              fhe.enc(hpk, tau, rng)]
    ce = fhe.eval(hpk, circuit, inputs, rng)
    return ZkTranscript(xi, y, c, chi, ce, tau=tau)


def zk_verify(st_V: VerifierState, H: ZXHamiltonian, tr: ZkTranscript, fhe=None, nizk=None) -> bool:
    fhe = fhe or TransparentFHE()
    nizk = nizk or ToyNIZK()
    if tr.xi.value != st_V.xi.value:
        return False
    try:
        proof = fhe.dec(st_V.hsk, tr.ce)
    except DecryptionError:
        return False
    x = LInstance(H, st_V.s, st_V.keys, tr.xi, np.asarray(tr.y), np.asarray(tr.c), tr.chi)
    try:
        return bool(nizk.verify(st_V.crs, x, proof))
    except (ValueError, TypeError):
        return False


def instance_of(H: ZXHamiltonian, st_V: VerifierState, tr: ZkTranscript) -> LInstance:
    return LInstance(H, st_V.s, st_V.keys, tr.xi, np.asarray(tr.y), np.asarray(tr.c), tr.chi)


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------


def _bit_of_sign(sign: np.ndarray) -> np.ndarray:
    # parity of decoded bits that lands in the -m eigenspace
    return (1 + sign) // 2


def simulate(H: ZXHamiltonian, zs: ZkSetup, challenge: ChallengeSource, rng: np.random.Generator,
             fhe=None, nizk=None) -> ZkTranscript:
    """Transcript produced from trapdoors alone, with no witness state.

    Commit: uniform ``(b, x)`` per qubit, except that for copies whose term
    is a ZZ term consistent with the bases the second term qubit's bit is
    chosen so the pad-corrected parity satisfies the term.  Test groups
    answer ``(b, x)``.  In Hadamard groups every claw-free qubit gets a
    uniform nonzero ``t``; for consistent XX copies the logical bits ``b'``
    are chosen to satisfy the term and the answer is
    ``w = b' xor o xor gamma`` with hardcore bit ``o = t.(x0 xor x1)``.
    Everything else is uniform.
    """
    fhe = fhe or TransparentFHE()
    nizk = nizk or ToyNIZK()
    st_V, st_P = zs.st_V, zs.st_P
    p = st_V.params
    C, n = p.copies, p.n
    keys = st_V.keys
    pk = keys.public()
    h = keys.kinds.reshape(C, n)
    beta = np.asarray(st_P.beta, dtype=np.int64).reshape(C, n)
    gamma = np.asarray(st_P.gamma, dtype=np.int64).reshape(C, n)

    term = sample_term_indices(H, st_V.s)
    q1, q2, xx, sign = (arr[term] for arr in term_arrays(H))
    rows = np.arange(C)
    consistent = np.where(xx, (h[rows, q1] == 1) & (h[rows, q2] == 1), (h[rows, q1] == 0) & (h[rows, q2] == 0))
    want = _bit_of_sign(sign)

    b = rng.integers(0, 2, size=(C, n))
    x = pk.sample_domain(rng).reshape(C, n)
    zz = consistent & ~xx
    b[rows[zz], q2[zz]] = (b[rows[zz], q1[zz]] ^ want[zz] ^ beta[rows[zz], q1[zz]] ^ beta[rows[zz], q2[zz]])
    y = pk.eval(b.ravel(), x.ravel())

    xi = st_V.xi
    c = np.asarray(challenge(xi, y), dtype=np.int64)
    hadamard = np.repeat(c, p.r) == 1

    w = b.copy()
    t = x.copy()
    if hadamard.any():
        _, x0, x1 = keys.decode(y)
        x0, x1 = x0.reshape(C, n), x1.reshape(C, n)
        ntcf = h == FamilyKind.NTCF
        d = pk.sample_nonzero(rng).reshape(C, n)
        o = parity(d & (x0 ^ x1))
        bprime = rng.integers(0, 2, size=(C, n))
        xx_c = consistent & xx
        bprime[rows[xx_c], q2[xx_c]] = bprime[rows[xx_c], q1[xx_c]] ^ want[xx_c]
        w_ntcf = bprime ^ o ^ gamma
        noise_w = rng.integers(0, 2, size=(C, n))
        noise_t = pk.sample_domain(rng).reshape(C, n)
        w_had = np.where(ntcf, np.where(consistent[:, None], w_ntcf, noise_w), noise_w)
        t_had = np.where(ntcf, d, noise_t)
        sel = hadamard[:, None]
        w = np.where(sel, w_had, w)
        t = np.where(sel, t_had, t)

    w, t = w.ravel().astype(np.int64), t.ravel().astype(np.uint64)
    r2 = random_bytes(rng)
    chi = commit_msg(response_message(w, t), r2)
    x_inst = LInstance(H, st_V.s, keys, xi, y, c, chi)
    ce = fhe.enc(st_V.hpk, nizk.simulate(st_V.crs, x_inst), rng)
    tau = LWitness(st_P.beta, st_P.gamma, w, t, st_P.r1, r2)
    return ZkTranscript(xi, y, c, chi, ce, mode="zk-sim", tau=tau)


# ---------------------------------------------------------------------------
# Fiat-Shamir variants
# ---------------------------------------------------------------------------


def fs_zk_challenge(oracle: RandomOracle, H: ZXHamiltonian, setup_dig: bytes, k: int) -> ChallengeSource:
    x = instance_digest(H)

    def source(xi: Commitment, y) -> np.ndarray:
        return derive_challenge(oracle, x, setup_dig, lp(xi.value) + u64_bytes(y), k)

    return source


def fs_zk_prove(H: ZXHamiltonian, st_P: ProverState, device: KeyArray, oracle: RandomOracle,
                rng: np.random.Generator, fhe=None, nizk=None, state=None) -> ZkTranscript:
    dig = zk_setup_digest(st_P.crs, st_P.pk, st_P.hpk)
    tr = zk_prove(H, st_P, device, fs_zk_challenge(oracle, H, dig, st_P.params.k), rng, fhe, nizk, state)
    tr.mode = "fs-zk"
    return tr


def fs_zk_verify(st_V: VerifierState, H: ZXHamiltonian, tr: ZkTranscript, oracle: RandomOracle,
                 fhe=None, nizk=None) -> bool:
    dig = zk_setup_digest(st_V.crs, st_V.keys.public(), st_V.hpk)
    expected = fs_zk_challenge(oracle, H, dig, st_V.params.k)(tr.xi, np.asarray(tr.y, dtype=np.uint64))
    if not np.array_equal(np.asarray(tr.c), expected):
        return False
    return zk_verify(st_V, H, tr, fhe, nizk)


def fs_simulate(H: ZXHamiltonian, zs: ZkSetup, oracle: RandomOracle, rng: np.random.Generator,
                fhe=None, nizk=None) -> ZkTranscript:
    """Simulator that obtains its challenges by querying the oracle."""
    st_V = zs.st_V
    dig = zk_setup_digest(st_V.crs, st_V.keys.public(), st_V.hpk)
    tr = simulate(H, zs, fs_zk_challenge(oracle, H, dig, st_V.params.k), rng, fhe, nizk)
    tr.mode = "fs-zk-sim"
    return tr
