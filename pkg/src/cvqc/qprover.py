"""Honest prover simulation with the compact claw-state representation.

After committing, every NTCF qubit carries its logical amplitude and a claw
``(x0, x1)``.  The joint register state is
``sum_b phi_b |b>|x_b>|y>``, so measuring the preimage register in the
computational basis returns ``(b, x_b)`` and measuring it in the Hadamard
basis with outcome ``(w, d)`` acts on the logical qubit as
``Z^{d.(x0 xor x1)}`` followed by an X-basis measurement.  NTIF qubits
collapse at commit time because the image reveals the bit.

All routines work on a batch of copies at once: statevectors are stored as a
``(copies, 2**n)`` complex array and per-qubit records as ``(copies, n)``
arrays.  Key ``copy * n + qubit`` belongs to qubit ``qubit`` of copy ``copy``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcfam import FamilyKind, KeyArray, parity
from .hamiltonian import MAX_DENSE_QUBITS, NORM_TOL, ZXHamiltonian, min_energy

_SQRT_HALF = np.sqrt(0.5)


@dataclass
class WitnessState:
    n: int
    copies: np.ndarray

    def __post_init__(self):
        self.copies = np.atleast_2d(np.asarray(self.copies, dtype=complex))
        if self.copies.shape[1] != 1 << self.n:
            raise ValueError(f"statevector dimension {self.copies.shape[1]} != 2^{self.n}")
        norms = np.linalg.norm(self.copies, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise ValueError("witness copies must be normalized")

    @property
    def count(self) -> int:
        return self.copies.shape[0]


def prepare_witness(H: ZXHamiltonian, copies: int, state: np.ndarray | None = None) -> WitnessState:
    """``copies`` copies of the ground state of ``H``, or of an injected vector."""
    if H.n > MAX_DENSE_QUBITS:
        raise ValueError(f"witness preparation capped at {MAX_DENSE_QUBITS} qubits")
    psi = min_energy(H)[1] if state is None else np.asarray(state, dtype=complex)
    return WitnessState(H.n, np.tile(psi, (copies, 1)))


# ---------------------------------------------------------------------------
# single-qubit gates on a batch of copies
# ---------------------------------------------------------------------------


def _split(psi: np.ndarray, n: int, q: int) -> np.ndarray:
    return psi.reshape(psi.shape[0], 1 << q, 2, 1 << (n - q - 1))


def apply_x(psi: np.ndarray, n: int, q: int, rows: np.ndarray) -> None:
    v = _split(psi, n, q)
    swapped = v[:, :, ::-1, :]
    v[...] = np.where(rows[:, None, None, None], swapped, v)


def apply_z(psi: np.ndarray, n: int, q: int, rows: np.ndarray) -> None:
    v = _split(psi, n, q)
    v[:, :, 1, :] *= np.where(rows, -1.0, 1.0)[:, None, None]


def apply_h(psi: np.ndarray, n: int, q: int, rows: np.ndarray) -> None:
    v = _split(psi, n, q)
    a, b = v[:, :, 0, :].copy(), v[:, :, 1, :].copy()
    sel = rows[:, None, None]
    v[:, :, 0, :] = np.where(sel, (a + b) * _SQRT_HALF, a)
    v[:, :, 1, :] = np.where(sel, (a - b) * _SQRT_HALF, b)


def measure_qubit(psi: np.ndarray, n: int, q: int, rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Born-rule Z measurement of qubit ``q`` on the selected copies, with collapse."""
    v = _split(psi, n, q)
    p1 = np.sum(np.abs(v[:, :, 1, :]) ** 2, axis=(1, 2))
    bits = (rng.random(psi.shape[0]) < p1).astype(np.int64)
    bits = np.where(rows, bits, 0)
    keep = np.stack([bits == 0, bits == 1], axis=1)
    keep |= ~rows[:, None]
    v *= keep[:, None, :, None]
    norms = np.linalg.norm(psi, axis=1)
    psi /= np.where(norms > 0, norms, 1.0)[:, None]
    return bits


def sample_basis(psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Joint computational-basis outcome index for each copy."""
    probs = np.abs(psi) ** 2
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(psi.shape[0]) * cdf[:, -1]
    idx = np.sum(cdf <= u[:, None], axis=1)
    return np.minimum(idx, psi.shape[1] - 1)


def index_bits(idx: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return (np.asarray(idx)[:, None] >> shifts) & 1


# ---------------------------------------------------------------------------
# padding
# ---------------------------------------------------------------------------


def pad(state: WitnessState, beta, gamma) -> WitnessState:
    """Return ``X^beta Z^gamma |psi>`` per copy; pads are (n,) or (copies, n) bit arrays."""
    n, C = state.n, state.count
    beta = np.broadcast_to(np.asarray(beta, dtype=np.int64), (C, n)) if np.ndim(beta) else None
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.int64), (C, n)) if np.ndim(gamma) else None
    if beta is None or gamma is None:
        raise ValueError("pads must be bit arrays")
    psi = state.copies.copy()
    for q in range(n):
        apply_z(psi, n, q, gamma[:, q].astype(bool))
        apply_x(psi, n, q, beta[:, q].astype(bool))
    return WitnessState(n, psi)


# ---------------------------------------------------------------------------
# commitment and measurements
# ---------------------------------------------------------------------------


@dataclass
class CommittedState:
    n: int
    psi: np.ndarray
    kinds: np.ndarray
    y: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    b: np.ndarray
    keys: KeyArray

    @property
    def count(self) -> int:
        return self.psi.shape[0]


def commit(state: WitnessState, keys: KeyArray, rng: np.random.Generator) -> tuple[CommittedState, np.ndarray]:
    """Commit every qubit of every copy; returns the state and images of shape (copies, n).

    ``keys`` is the prover's evaluation device.  Pairing ``x0`` with its claw
    partner uses the device's trapdoor as a stand-in for the coherent
    sampling procedure; no secret value ever leaves this module.
    """
    n, C = state.n, state.count
    if len(keys) != n * C:
        raise ValueError(f"need {n * C} keys, got {len(keys)}")
    psi = state.copies.copy()
    kinds = keys.kinds.reshape(C, n)
    x = keys.sample_domain(rng).reshape(C, n)
    b = np.zeros((C, n), dtype=np.int64)
    for q in range(n):
        injective = kinds[:, q] == FamilyKind.NTIF
        b[:, q] = measure_qubit(psi, n, q, injective, rng)
    y = keys.eval(b.ravel(), x.ravel())
    ok, first, second = keys.decode(y)
    if not ok.all():
        raise RuntimeError("device produced an image without a preimage")
    ntcf = kinds == FamilyKind.NTCF
    x1 = np.where(ntcf, second.reshape(C, n), x)
    b = np.where(ntcf, -1, b)
    cs = CommittedState(n, psi, kinds, y.reshape(C, n), x, x1, b, keys)
    return cs, cs.y.copy()


def _all_rows(cs: CommittedState, rows) -> np.ndarray:
    return np.ones(cs.count, dtype=bool) if rows is None else np.asarray(rows, dtype=bool)


def measure_test(cs: CommittedState, rng: np.random.Generator, rows=None) -> tuple[np.ndarray, np.ndarray]:
    """Computational-basis answer ``(w, t)`` of shape (copies, n) on the selected copies."""
    rows = _all_rows(cs, rows)
    n = cs.n
    w = np.where(cs.kinds == FamilyKind.NTIF, cs.b, 0)
    for q in range(n):
        ntcf = rows & (cs.kinds[:, q] == FamilyKind.NTCF)
        bits = measure_qubit(cs.psi, n, q, ntcf, rng)
        w[:, q] = np.where(ntcf, bits, w[:, q])
    t = np.where(w == 1, cs.x1, cs.x0)
    return w.astype(np.int64), t.astype(np.uint64)


def measure_hadamard(cs: CommittedState, rng: np.random.Generator, rows=None) -> tuple[np.ndarray, np.ndarray]:
    """Hadamard-basis answer ``(w, t)`` of shape (copies, n) on the selected copies."""
    rows = _all_rows(cs, rows)
    n, C = cs.n, cs.count
    ntcf = cs.kinds == FamilyKind.NTCF
    d = cs.keys.sample_nonzero(rng).reshape(C, n)
    o = parity(d & (cs.x0 ^ cs.x1))
    for q in range(n):
        sel = rows & ntcf[:, q]
        apply_z(cs.psi, n, q, sel & (o[:, q] == 1))
        apply_h(cs.psi, n, q, sel)
    idx = sample_basis(cs.psi, rng)
    measured = index_bits(idx, n)
    # collapse the measured copies onto their outcomes
    collapsed = np.zeros_like(cs.psi)
    collapsed[np.arange(C), idx] = 1.0
    cs.psi[rows] = collapsed[rows]
    noise_w = rng.integers(0, 2, size=(C, n))
    noise_t = cs.keys.sample_domain(rng).reshape(C, n)
    w = np.where(ntcf, measured, noise_w)
    t = np.where(ntcf, d, noise_t)
    return w.astype(np.int64), t.astype(np.uint64)
