"""The three-round verification protocol with instance-independent setup.

Qubits are indexed ``(i, j, l)`` for group ``i < k``, copy ``j < r`` and
qubit ``l < n``, flattened in that nesting order: ``((i * r) + j) * n + l``.
Copy ``(i, j)`` has flat copy index ``i * r + j`` and owns one 64-bit
term-sampling string ``s[i * r + j]``.

Round structure: the prover commits to images ``y``; the verifier sends one
challenge bit per group (0 = test round, 1 = Hadamard round); the prover
answers ``u = (w, t)`` per qubit; ``verdict`` decides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .encoding import join_fields, sha256, u8_bytes, u8_from_bytes, u64_bytes, u64_from_bytes
from .funcfam import BACKENDS, FamilyKind, KeyArray, keys_for_bases, parity
from .hamiltonian import ZXHamiltonian, sample_term_indices, term_arrays
from .qprover import WitnessState, commit, measure_hadamard, measure_test, pad, prepare_witness

MAX_SETUP_QUBITS = 1 << 20
THRESHOLD_TOL = 1e-9
TRANSCRIPT_TAG = b"CVQC-TR-v1"
SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Params:
    lam: int
    n: int
    r: int
    k: int
    backend: str = "mock"

    @property
    def copies(self) -> int:
        return self.r * self.k

    @property
    def qubits(self) -> int:
        return self.n * self.r * self.k


@dataclass
class VerifierSetup:
    params: Params
    h: np.ndarray
    keys: KeyArray
    s: np.ndarray


@dataclass
class ProverSetup:
    params: Params
    pk: KeyArray


def _check_params(lam: int, n: int, r: int, k: int, backend: str) -> Params:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if n < 1 or r < 1 or k < 0:
        raise ValueError("need n >= 1, r >= 1, k >= 0")
    if n * r * k > MAX_SETUP_QUBITS:
        raise ValueError(f"n*r*k = {n * r * k} exceeds the cap of {MAX_SETUP_QUBITS}")
    return Params(int(lam), int(n), int(r), int(k), backend)


def sample_term_strings(count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, (1 << 64) - 1, size=count, dtype=np.uint64, endpoint=True)


def setup(lam: int, n: int, r: int, k: int, rng: np.random.Generator,
          backend: str = "mock") -> tuple[VerifierSetup, ProverSetup]:
    """Instance-independent setup: bases, keys and term randomness depend on ``n`` only."""
    params = _check_params(lam, n, r, k, backend)
    h = rng.integers(0, 2, size=params.qubits)
    keys = keys_for_bases(lam, h, rng, backend)
    s = sample_term_strings(params.copies, rng)
    return VerifierSetup(params, h, keys, s), ProverSetup(params, keys.public())


def setup_ctq(lam: int, width: int, k: int, rng: np.random.Generator,
              backend: str = "mock") -> tuple[VerifierSetup, ProverSetup]:
    """Setup for the test-of-quantumness mode: ``k`` repetitions of ``width`` claw-free qubits."""
    params = _check_params(lam, width, 1, k, backend)
    h = np.ones(params.qubits, dtype=np.int64)
    keys = keys_for_bases(lam, h, rng, backend)
    s = np.zeros(params.copies, dtype=np.uint64)
    return VerifierSetup(params, h, keys, s), ProverSetup(params, keys.public())


def instance_digest(H: ZXHamiltonian | None) -> bytes:
    return sha256(b"CVQC-H-v1" + (H.canonical_bytes() if H is not None else b"ctq"))


def setup_digest(pk: KeyArray) -> bytes:
    return pk.digest()


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PublicView:
    """Everything a prover may see: the instance, public keys and dimensions."""

    H: ZXHamiltonian | None
    pk: KeyArray
    n: int
    r: int
    k: int

    def __post_init__(self):
        if self.pk.has_secrets:
            raise PermissionError("prover views carry public keys only")


class Strategy:
    """Prover behaviour: ``commit`` returns flat images, ``respond`` returns flat ``(w, t)``."""

    name = "strategy"
    quantum = False

    def commit(self, view: PublicView, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def respond(self, c: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class QuantumStrategy(Strategy):
    """A strategy that runs on the simulated quantum device.

    The device is the key array used to emulate coherent evaluation of the
    function family; it is only ever handed to ``qprover``.
    """

    quantum = True

    def commit(self, view: PublicView, rng: np.random.Generator, device: KeyArray | None = None) -> np.ndarray:
        raise NotImplementedError


def uniform_superposition(n: int) -> np.ndarray:
    return np.full(1 << n, (1 << n) ** -0.5, dtype=complex)


class HonestProver(QuantumStrategy):
    """Prepares ``r*k`` witness copies, commits, and measures per the challenge.

    ``state`` overrides the ground state; ``beta``/``gamma`` (flat, one bit
    per qubit) apply a one-time pad before committing.
    """

    name = "honest"

    def __init__(self, state: np.ndarray | None = None, beta=None, gamma=None):
        self.state = state
        self.beta = beta
        self.gamma = gamma
        self._cs = None
        self._r = None

    def witness(self, view: PublicView) -> WitnessState:
        copies = view.r * view.k
        if view.H is None:
            psi = uniform_superposition(view.n) if self.state is None else self.state
            ws = WitnessState(view.n, np.tile(np.asarray(psi, dtype=complex), (copies, 1)))
        else:
            ws = prepare_witness(view.H, copies, self.state)
        if self.beta is not None:
            shape = (copies, view.n)
            ws = pad(ws, np.reshape(self.beta, shape), np.reshape(self.gamma, shape))
        return ws

    def commit(self, view, rng, device=None):
        if device is None:
            raise PermissionError("honest prover needs the quantum device")
        self._r = view.r
        self._cs, y = commit(self.witness(view), device, rng)
        return y.ravel()

    def respond(self, c, rng):
        hadamard = np.repeat(np.asarray(c, dtype=np.int64), self._r) == 1
        wt, tt = measure_test(self._cs, rng, ~hadamard)
        wh, th = measure_hadamard(self._cs, rng, hadamard)
        sel = hadamard[:, None]
        return np.where(sel, wh, wt).ravel(), np.where(sel, th, tt).ravel()


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------


@dataclass
class VerdictDetail:
    accept: bool
    group_pass: np.ndarray
    consistent: np.ndarray
    satisfied: np.ndarray
    challenge: np.ndarray
    malformed: bool = False

    @property
    def empty_hadamard_groups(self) -> int:
        """Hadamard groups with no consistent copy (these pass vacuously)."""
        return int(np.sum((self.challenge == 1) & (self.consistent == 0)))


def _coerce_response(u, N: int):
    try:
        w, t = u
        w = np.asarray(w)
        t = np.asarray(t)
        if w.shape != (N,) or t.shape != (N,):
            return None
        if not (np.issubdtype(w.dtype, np.integer) and np.issubdtype(t.dtype, np.integer)):
            return None
        # responses carry one bit w per qubit; anything else is malformed
        if N and (t.min() < 0 or w.min() < 0 or w.max() > 1):
            return None
        return w.astype(np.int64), t.astype(np.uint64)
    except (TypeError, ValueError):
        return None


def _coerce_images(y, N: int):
    try:
        y = np.asarray(y).ravel()
        if y.shape != (N,) or not np.issubdtype(y.dtype, np.integer) or (N and y.min() < 0):
            return None
        return y.astype(np.uint64)
    except (TypeError, ValueError):
        return None


def _reject_all(k: int, malformed: bool = True) -> VerdictDetail:
    z = np.zeros(k, dtype=np.int64)
    return VerdictDetail(k == 0, np.zeros(k, dtype=bool), z, z.copy(), z.copy(), malformed)


def _hadamard_decode(keys: KeyArray, y, w, t):
    """Decoded bit ``e`` and a validity flag per qubit (flat arrays)."""
    ok, first, second = keys.decode(y)
    ntcf = keys.kinds == FamilyKind.NTCF
    width = np.uint64(keys.uniform_w) if keys.uniform_w is not None else None
    if width is not None:
        in_domain = (t >> width) == 0
    else:
        in_domain = np.array([int(tt) < (1 << pk.w) for tt, pk in zip(t, keys.pks)], dtype=bool)
    e_ntcf = parity(t & (first ^ second)) ^ (w & 1)
    valid = ok & np.where(ntcf, (t != 0) & in_domain, True)
    e = np.where(ntcf, e_ntcf, first.astype(np.int64) & 1)
    return e, valid


def evaluate_verdict(H: ZXHamiltonian, s, keys: KeyArray, y, c, u, a: float | None = None,
                     b: float | None = None, pads=None) -> VerdictDetail:
    """Full verdict with per-group diagnostics; see ``verdict``."""
    a = H.a if a is None else a
    b = H.b if b is None else b
    c = np.asarray(c, dtype=np.int64).ravel()
    k = c.shape[0]
    s = np.asarray(s, dtype=np.uint64).ravel()
    copies = s.shape[0]
    n = H.n
    if k == 0:
        return _reject_all(0, malformed=False)
    if copies % k or len(keys) != copies * n:
        raise ValueError("setup shapes are inconsistent with (n, r, k)")
    r = copies // k
    N = copies * n
    y = _coerce_images(y, N)
    resp = _coerce_response(u, N)
    if y is None or resp is None or not np.all((c == 0) | (c == 1)):
        return _reject_all(k)
    w, t = resp

    chk_ok = keys.chk(w, t, y).reshape(k, r * n).all(axis=1)

    term = sample_term_indices(H, s)
    q1, q2, xx, sign = (arr[term] for arr in term_arrays(H))
    h = keys.kinds.reshape(copies, n)
    rows = np.arange(copies)
    hq1, hq2 = h[rows, q1], h[rows, q2]
    consistent = np.where(xx, (hq1 == 1) & (hq2 == 1), (hq1 == 0) & (hq2 == 0))

    hadamard_copy = np.repeat(c, r) == 1
    active = consistent & hadamard_copy
    sat = np.zeros(copies, dtype=bool)
    if active.any():
        qubit_idx = (np.flatnonzero(active)[:, None] * n + np.arange(n)).ravel()
        sub = keys.take(qubit_idx)
        e, valid = _hadamard_decode(sub, y[qubit_idx], w[qubit_idx], t[qubit_idx])
        e = e.reshape(-1, n)
        valid = valid.reshape(-1, n).all(axis=1)
        act = np.flatnonzero(active)
        sgn = sign[act].copy()
        if pads is not None:
            beta, gamma = (np.asarray(p, dtype=np.int64).reshape(copies, n) for p in pads)
            flip = np.where(xx[act], gamma[act, q1[act]] ^ gamma[act, q2[act]],
                            beta[act, q1[act]] ^ beta[act, q2[act]])
            sgn = np.where(flip == 1, -sgn, sgn)
        ar = np.arange(act.shape[0])
        parity_ok = (e[ar, q1[act]] ^ e[ar, q2[act]]) == (1 + sgn) // 2
        sat[act] = valid & parity_ok

    counts = consistent.reshape(k, r).sum(axis=1)
    satisfied = sat.reshape(k, r).sum(axis=1)
    threshold = (2.0 - a - b) * counts / 4.0
    energy_ok = satisfied >= threshold - THRESHOLD_TOL
    group_pass = np.where(c == 1, energy_ok, chk_ok)
    counts = np.where(c == 1, counts, 0)
    satisfied = np.where(c == 1, satisfied, 0)
    return VerdictDetail(bool(group_pass.all()), group_pass, counts, satisfied, c)


def verdict(H: ZXHamiltonian, s, keys: KeyArray, y, c, u, a: float | None = None,
            b: float | None = None, pads=None) -> bool:
    """Accept iff every group passes.

    Test groups (``c_i = 0``) need ``Chk`` to pass on every qubit.  Hadamard
    groups sample one term per copy, keep the copies whose bases match the
    term, decode their outcomes with the trapdoors and require at least
    ``(2 - a - b) |A_i| / 4`` satisfied terms.  ``pads`` = ``(beta, gamma)``
    evaluates the per-copy pad-conjugated Hamiltonian instead.
    """
    return evaluate_verdict(H, s, keys, y, c, u, a, b, pads).accept


def evaluate_verdict_ctq(keys: KeyArray, y, c, u, width: int) -> VerdictDetail:
    """Test-of-quantumness verdict: Hadamard groups need every decoded bit to be 0."""
    c = np.asarray(c, dtype=np.int64).ravel()
    k = c.shape[0]
    if k == 0:
        return _reject_all(0, malformed=False)
    N = k * width
    if len(keys) != N:
        raise ValueError("setup shapes are inconsistent with (width, k)")
    y = _coerce_images(y, N)
    resp = _coerce_response(u, N)
    if y is None or resp is None or not np.all((c == 0) | (c == 1)):
        return _reject_all(k)
    w, t = resp
    chk_ok = keys.chk(w, t, y).reshape(k, width).all(axis=1)
    e, valid = _hadamard_decode(keys, y, w, t)
    had_ok = (valid & (e == 0)).reshape(k, width).all(axis=1)
    group_pass = np.where(c == 1, had_ok, chk_ok)
    ones = np.where(c == 1, width, 0)
    return VerdictDetail(bool(group_pass.all()), group_pass, ones, np.where(c == 1, had_ok * width, 0), c)


def verdict_ctq(keys: KeyArray, y, c, u, width: int) -> bool:
    return evaluate_verdict_ctq(keys, y, c, u, width).accept


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------

_FIELDS = ("mode", "instance_digest", "setup_digest", "y", "c", "w", "t")


@dataclass
class Transcript:
    """Protocol messages plus the recomputable decision.

    ``digest`` covers the message fields only; the decision is checked by
    re-running the verdict.
    """

    mode: str
    instance_digest: bytes
    setup_digest: bytes
    y: np.ndarray
    c: np.ndarray
    w: np.ndarray
    t: np.ndarray
    decision: bool | None = None
    error: str | None = None
    stored_digest: bytes | None = field(default=None, repr=False, compare=False)
    detail: VerdictDetail | None = field(default=None, repr=False, compare=False)

    def field_bytes(self) -> dict[str, bytes]:
        return {
            "mode": self.mode.encode(),
            "instance_digest": self.instance_digest,
            "setup_digest": self.setup_digest,
            "y": u64_bytes(self.y),
            "c": u8_bytes(self.c),
            "w": u8_bytes(np.clip(self.w, 0, 255)) if len(self.w) else b"",
            "t": u64_bytes(self.t),
        }

    def canonical_bytes(self) -> bytes:
        fb = self.field_bytes()
        return join_fields(TRANSCRIPT_TAG, (fb[name] for name in _FIELDS))

    def digest(self) -> bytes:
        return sha256(self.canonical_bytes())

    def field_digests(self) -> dict[str, str]:
        return {name: sha256(data).hex() for name, data in self.field_bytes().items()}

    @property
    def u(self) -> tuple[np.ndarray, np.ndarray]:
        return self.w, self.t

    def to_json(self) -> dict:
        fb = self.field_bytes()
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "mode": self.mode,
            "instance_digest": self.instance_digest.hex(),
            "setup_digest": self.setup_digest.hex(),
            "y": fb["y"].hex(),
            "c": fb["c"].hex(),
            "w": fb["w"].hex(),
            "t": fb["t"].hex(),
            "decision": self.decision,
            "error": self.error,
            "digest": self.digest().hex(),
            "field_digests": self.field_digests(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Transcript":
        """Load a transcript; the stored digest is kept for integrity checks."""
        return cls(
            mode=data["mode"],
            instance_digest=bytes.fromhex(data["instance_digest"]),
            setup_digest=bytes.fromhex(data["setup_digest"]),
            y=u64_from_bytes(bytes.fromhex(data["y"])),
            c=u8_from_bytes(bytes.fromhex(data["c"])),
            w=u8_from_bytes(bytes.fromhex(data["w"])),
            t=u64_from_bytes(bytes.fromhex(data["t"])),
            decision=data.get("decision"),
            error=data.get("error"),
            stored_digest=bytes.fromhex(data["digest"]) if data.get("digest") else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# sessions
# ---------------------------------------------------------------------------


def prover_commit(prover: Strategy, view: PublicView, vsetup: VerifierSetup, rng) -> np.ndarray:
    if prover.quantum:
        return np.asarray(prover.commit(view, rng, device=vsetup.keys))
    return np.asarray(prover.commit(view, rng))


def _empty_response(N: int):
    return np.zeros(N, dtype=np.int64), np.zeros(N, dtype=np.uint64)


def _run(mode: str, H, vsetup: VerifierSetup, psetup: ProverSetup, prover: Strategy, rng,
         challenge, decide) -> Transcript:
    p = vsetup.params
    view = PublicView(H, psetup.pk, p.n, p.r, p.k)
    N = p.qubits
    error = None
    y = np.zeros(N, dtype=np.uint64)
    c = np.zeros(p.k, dtype=np.int64)
    w, t = _empty_response(N)
    try:
        y = prover_commit(prover, view, vsetup, rng)
        c = challenge(y)
        w, t = prover.respond(c, rng)
    except Exception as exc:  # a misbehaving prover loses, it does not crash the verifier
        error = f"{type(exc).__name__}: {exc}"
    tr = Transcript(mode, instance_digest(H), setup_digest(psetup.pk),
                    np.asarray(y).ravel(), np.asarray(c).ravel(), np.asarray(w).ravel(), np.asarray(t).ravel(),
                    error=error)
    if error is not None:
        tr.decision = False
        return tr
    tr.detail = decide(tr)
    tr.decision = tr.detail.accept
    return tr


def run_interactive(H: ZXHamiltonian, setups: tuple[VerifierSetup, ProverSetup], prover: Strategy,
                    rng: np.random.Generator) -> Transcript:
    vsetup, psetup = setups
    if H.n != vsetup.params.n:
        raise ValueError(f"instance has {H.n} qubits, setup was made for {vsetup.params.n}")
    k = vsetup.params.k

    def decide(tr):
        return evaluate_verdict(H, vsetup.s, vsetup.keys, tr.y, tr.c, tr.u)

    return _run("interactive", H, vsetup, psetup, prover, rng, lambda y: rng.integers(0, 2, size=k), decide)


def run_ctq(setups: tuple[VerifierSetup, ProverSetup], prover: Strategy, rng: np.random.Generator) -> Transcript:
    vsetup, psetup = setups
    k, width = vsetup.params.k, vsetup.params.n

    def decide(tr):
        return evaluate_verdict_ctq(vsetup.keys, tr.y, tr.c, tr.u, width)

    return _run("ctq", None, vsetup, psetup, prover, rng, lambda y: rng.integers(0, 2, size=k), decide)


def replay_decision(H: ZXHamiltonian | None, vsetup: VerifierSetup, tr: Transcript) -> bool:
    """Recompute the decision of a stored transcript."""
    if tr.mode == "ctq":
        return verdict_ctq(vsetup.keys, tr.y, tr.c, tr.u, vsetup.params.n)
    return verdict(H, vsetup.s, vsetup.keys, tr.y, tr.c, tr.u)


# ---------------------------------------------------------------------------
# setup persistence
# ---------------------------------------------------------------------------


def setup_to_json(vsetup: VerifierSetup, include_secrets: bool = True) -> dict:
    p = vsetup.params
    out = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "params": {"lam": p.lam, "n": p.n, "r": p.r, "k": p.k, "backend": p.backend},
        "pk": vsetup.keys.to_bytes().hex(),
        "setup_digest": setup_digest(vsetup.keys).hex(),
    }
    if include_secrets:
        out["h"] = u8_bytes(vsetup.h).hex()
        out["s"] = u64_bytes(vsetup.s).hex()
        out["sk"] = vsetup.keys.secret_bytes().hex()
    return out


def setup_from_json(data: dict) -> tuple[VerifierSetup | None, ProverSetup]:
    p = Params(**data["params"])
    pk = bytes.fromhex(data["pk"])
    if "sk" not in data:
        return None, ProverSetup(p, KeyArray.from_bytes(pk))
    keys = KeyArray.from_bytes(pk, bytes.fromhex(data["sk"]))
    vs = VerifierSetup(p, u8_from_bytes(bytes.fromhex(data["h"])), keys,
                       u64_from_bytes(bytes.fromhex(data["s"])))
    if not np.array_equal(vs.h, keys.kinds):
        raise ValueError("stored bases disagree with key kinds")
    return vs, ProverSetup(p, keys.public())
