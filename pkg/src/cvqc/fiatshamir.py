"""Fiat-Shamir compression and the reprogramming reduction for classical adversaries.

Challenge derivation (bit-exact)::

    digest = SHA-256(b"CVQC-FS-v1" || lp(x) || lp(w) || lp(y))
    c      = first k bits of digest, most significant bit of byte 0 first

where ``lp`` prefixes each field with its length as an 8-byte big-endian
integer, ``x`` is the instance digest, ``w`` the public-key digest and ``y``
the commitment images as 8-byte big-endian words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .encoding import bits_msb_first, join_fields, sha256, u64_bytes
from .hamiltonian import ZXHamiltonian
from .protocol import (ProverSetup, Strategy, Transcript, VerifierSetup, _run, evaluate_verdict, instance_digest,
                       setup_digest)

FS_TAG = b"CVQC-FS-v1"
MAX_CHALLENGE_BITS = 256


class RandomOracle:
    """SHA-256 with domain separation; classical access only."""

    def __init__(self, tag: bytes = FS_TAG):
        self.tag = tag

    def digest(self, x: bytes, w: bytes, y: bytes) -> bytes:
        return sha256(join_fields(self.tag, (x, w, y)))

    def __call__(self, x: bytes, w: bytes, y: bytes) -> bytes:
        return self.digest(x, w, y)


def derive_challenge(oracle: RandomOracle, x: bytes, w: bytes, y: bytes, k: int) -> np.ndarray:
    if not 0 <= k <= MAX_CHALLENGE_BITS:
        raise ValueError(f"challenge length must be in [0, {MAX_CHALLENGE_BITS}]")
    return bits_msb_first(oracle(x, w, y), k)


class FSTranscript(Transcript):
    """Transcript whose challenge is derived from the commitment; ``x`` and ``w`` are digests."""

    @property
    def x(self) -> bytes:
        return self.instance_digest

    @property
    def w_digest(self) -> bytes:
        return self.setup_digest


def fs_prove(H: ZXHamiltonian, setups: tuple[VerifierSetup, ProverSetup], prover: Strategy,
             oracle: RandomOracle, rng: np.random.Generator) -> FSTranscript:
    """Prover computes its own challenge from ``(x, w, y)`` and answers it."""
    vsetup, psetup = setups
    k = vsetup.params.k
    x, w = instance_digest(H), setup_digest(psetup.pk)

    def challenge(y):
        return derive_challenge(oracle, x, w, u64_bytes(y), k)

    def decide(tr):
        return evaluate_verdict(H, vsetup.s, vsetup.keys, tr.y, tr.c, tr.u)

    tr = _run("fs", H, vsetup, psetup, prover, rng, challenge, decide)
    return FSTranscript(**{f: getattr(tr, f) for f in tr.__dataclass_fields__})


def fs_check(H: ZXHamiltonian, vsetup: VerifierSetup, tr: Transcript, oracle: RandomOracle) -> str | None:
    """Reason a transcript fails the non-verdict checks, or None."""
    if tr.mode != "fs":
        return "not a Fiat-Shamir transcript"
    if tr.instance_digest != instance_digest(H):
        return "instance digest mismatch"
    if tr.setup_digest != setup_digest(vsetup.keys):
        return "setup digest mismatch"
    if tr.stored_digest is not None and tr.stored_digest != tr.digest():
        return "transcript digest mismatch"
    try:
        y_bytes = u64_bytes(tr.y)
    except (TypeError, ValueError, OverflowError):
        return "malformed images"
    c = derive_challenge(oracle, tr.instance_digest, tr.setup_digest, y_bytes, vsetup.params.k)
    if not np.array_equal(np.asarray(tr.c), c):
        return "challenge does not match the oracle"
    return None


def fs_verify(H: ZXHamiltonian, vsetup: VerifierSetup, tr: Transcript, oracle: RandomOracle) -> bool:
    """Re-derive the challenge and run the interactive verdict on it.

    Transcripts loaded from JSON carry their stored digest, which is checked
    against the canonical bytes first.
    """
    if fs_check(H, vsetup, tr, oracle) is not None:
        return False
    return evaluate_verdict(H, vsetup.s, vsetup.keys, tr.y, tr.c, tr.u).accept


# ---------------------------------------------------------------------------
# reduction bound and simulator
# ---------------------------------------------------------------------------


def fs_bound(q: int, range_size: float, eps: float) -> float:
    """Success lower bound of the reprogramming reduction for a q-query adversary."""
    if q < 0 or range_size < 1:
        raise ValueError("need q >= 0 and range_size >= 1")
    return eps / (2 * (2 * q + 1) * (2 * q + 3)) - 1.0 / ((2 * q + 1) * range_size)


class QueryBudgetExceeded(RuntimeError):
    pass


class LazyOracle:
    """Random function on ``(x, y)`` sampled lazily with ``bits``-bit outputs."""

    def __init__(self, rng: np.random.Generator, bits: int):
        self.rng = rng
        self.bits = bits
        self.table: dict = {}

    def __call__(self, x, y) -> int:
        key = (x, y)
        if key not in self.table:
            self.table[key] = int(self.rng.integers(0, 1 << self.bits))
        return self.table[key]


class ReprogrammedOracle:
    """``F * theta y``: answers ``theta`` whenever the queried y equals ``y``."""

    def __init__(self, base: Callable, y, theta: int):
        self.base = base
        self.y = y
        self.theta = theta

    def __call__(self, x, y) -> int:
        return self.theta if y == self.y else self.base(x, y)


class EchoVerifier:
    """Toy sigma-protocol verifier: the response must equal the challenge."""

    def __init__(self, bits: int):
        self.bits = bits

    def challenge(self, y, rng: np.random.Generator) -> int:
        return int(rng.integers(0, 1 << self.bits))

    def accepts(self, y, theta: int, m) -> bool:
        return m == theta


@dataclass
class ReductionResult:
    y: object
    m: object
    success: bool
    aborted: bool
    index: int
    coin: int
    queries: int


def reduction_sim(adversary: Callable, verifier, q: int, rng: np.random.Generator,
                  bits: int | None = None) -> ReductionResult:
    """Turn a q-query Fiat-Shamir adversary into an interactive prover.

    ``adversary(query)`` must return ``(y, m)``; ``query(x, y)`` is its only
    oracle.  Queries up to index ``i`` see a lazily sampled function; the
    commitment ``y`` is read from query ``i + 1`` (or from the final output
    when fewer queries are made), sent to the verifier for ``theta``, and the
    remaining queries see the reprogrammed oracle.  With coin ``b = 1``, query
    ``i + 1`` itself still sees the original function.
    """
    bits = verifier.bits if bits is None else bits
    F = LazyOracle(rng, bits)
    i = int(rng.integers(0, q + 1))
    coin = int(rng.integers(0, 2))
    state = {"count": 0, "y": None, "theta": None, "oracle": None}

    def query(x, y):
        state["count"] += 1
        n = state["count"]
        if n > q:
            raise QueryBudgetExceeded(f"adversary exceeded {q} queries")
        if n <= i:
            return F(x, y)
        if n == i + 1:
            state["y"] = y
            state["theta"] = verifier.challenge(y, rng)
            state["oracle"] = ReprogrammedOracle(F, y, state["theta"])
            return F(x, y) if coin == 1 else state["oracle"](x, y)
        return state["oracle"](x, y)

    y_final, m = adversary(query)
    if state["y"] is None:
        state["y"] = y_final
        state["theta"] = verifier.challenge(y_final, rng)
    aborted = y_final != state["y"]
    success = (not aborted) and bool(verifier.accepts(state["y"], state["theta"], m))
    return ReductionResult(state["y"], m, success, aborted, i, coin, state["count"])


class OneQueryAdversary:
    """Queries ``(x, y*)`` once and answers with the oracle output (always valid against the real oracle)."""

    def __init__(self, y_star, x=b"instance"):
        self.y_star = y_star
        self.x = x

    def __call__(self, query):
        return self.y_star, query(self.x, self.y_star)


class NoQueryAdversary:
    """Outputs a fixed commitment and a fixed guess without touching the oracle."""

    def __init__(self, y_star, guess: int):
        self.y_star = y_star
        self.guess = guess

    def __call__(self, query):
        return self.y_star, self.guess


class SwitchingAdversary:
    """Queries one commitment, then outputs a different one (exercises the abort path)."""

    def __init__(self, y_first, y_final, x=b"instance"):
        self.y_first = y_first
        self.y_final = y_final
        self.x = x

    def __call__(self, query):
        return self.y_final, query(self.x, self.y_first)
