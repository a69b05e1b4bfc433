"""ZX Hamiltonians: normalization, term sampling, consistency and exact energies.

A Hamiltonian is ``H = sum_{i<j} J_ij (X_i X_j + Z_i Z_j)`` with ``2 sum |J_ij| = 1``.
Each coupling contributes two terms (one ZZ, one XX) of weight ``|J_ij|``, so
the term weights form a probability distribution.  After one-time-pad
conjugation the XX and ZZ signs of a pair may differ, which is why the term
list (not the coupling list) is the primary representation.

Qubit 0 is the most significant bit of a basis-state index.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DENSE_QUBITS = 12
TERM_RANDOMNESS_BITS = 64
NORM_TOL = 1e-9
DEFAULT_GAP = 0.4

_PAULI_ORDER = {"ZZ": 0, "XX": 1}


class InvalidInstance(ValueError):
    """Raised for malformed Hamiltonians or states."""


@dataclass(frozen=True)
class Term:
    qubits: tuple[int, int]
    pauli: str
    weight: float
    sign: int

    def __post_init__(self):
        if self.pauli not in _PAULI_ORDER:
            raise InvalidInstance(f"unknown Pauli type {self.pauli!r}")
        if self.sign not in (1, -1):
            raise InvalidInstance("term sign must be +1 or -1")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.qubits[0], self.qubits[1], _PAULI_ORDER[self.pauli])


@dataclass(frozen=True)
class ZXHamiltonian:
    n: int
    terms: tuple[Term, ...]
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInstance("need at least one qubit")
        if not self.terms:
            raise InvalidInstance("Hamiltonian has no terms")
        for t in self.terms:
            i, j = t.qubits
            if not 0 <= i < j < self.n:
                raise InvalidInstance(f"bad qubit pair {(i, j)} for n={self.n}")
        total = sum(t.weight for t in self.terms)
        if abs(total - 1.0) > 1e-12:
            raise InvalidInstance(f"term weights sum to {total}, expected 1")
        if not self.b > self.a:
            raise InvalidInstance(f"thresholds need b > a, got a={self.a}, b={self.b}")

    @property
    def gap(self) -> float:
        return self.b - self.a

    @property
    def couplings(self) -> list[tuple[int, int, float]]:
        """Signed couplings read off the ZZ terms (XX terms carry the same magnitude)."""
        return [(t.qubits[0], t.qubits[1], t.sign * t.weight) for t in self.terms if t.pauli == "ZZ"]

    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    def to_json(self) -> dict:
        if any(t.pauli == "XX" and _zz_sign(self, t.qubits) != t.sign for t in self.terms):
            raise InvalidInstance("padded Hamiltonians have no coupling form; serialize terms instead")
        return {
            "n": self.n,
            "couplings": [[i, j, J] for i, j, J in self.couplings],
            "a": self.a,
            "b": self.b,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ZXHamiltonian":
        couplings = {(int(i), int(j)): float(J) for i, j, J in data["couplings"]}
        return normalize(couplings, n=int(data["n"]), a=data.get("a"), b=data.get("b"))

    def canonical_bytes(self) -> bytes:
        """Stable byte form over the term list; used for instance digests."""
        rows = [[t.qubits[0], t.qubits[1], t.pauli, repr(float(t.weight)), t.sign] for t in self.terms]
        body = {"n": self.n, "terms": rows, "a": repr(float(self.a)), "b": repr(float(self.b))}
        return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def _zz_sign(H: ZXHamiltonian, qubits) -> int:
    for t in H.terms:
        if t.qubits == qubits and t.pauli == "ZZ":
            return t.sign
    return 0


def normalize(
    couplings: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]],
    n: int | None = None,
    a: float | None = None,
    b: float | None = None,
) -> ZXHamiltonian:
    """Rescale couplings so that ``2 sum |J| = 1`` and build the term list.

    Missing thresholds default to ``a = ground energy`` and ``b = a + 0.4``
    (requires ``n <= 12``).
    """
    if isinstance(couplings, Mapping):
        items = list(couplings.items())
    else:
        items = [((c[0], c[1]), c[2]) for c in couplings]
    merged: dict[tuple[int, int], float] = {}
    for (i, j), J in items:
        i, j = int(i), int(j)
        if i == j:
            raise InvalidInstance(f"self-coupling on qubit {i}")
        if i > j:
            i, j = j, i
        merged[(i, j)] = merged.get((i, j), 0.0) + float(J)
    merged = {k: v for k, v in merged.items() if v != 0.0}
    if not merged:
        raise InvalidInstance("all couplings are zero")
    if n is None:
        n = max(j for _, j in merged) + 1
    scale = 2.0 * sum(abs(v) for v in merged.values())
    terms = []
    for (i, j) in sorted(merged):
        J = merged[(i, j)] / scale
        sign = 1 if J > 0 else -1
        for pauli in ("ZZ", "XX"):
            terms.append(Term((i, j), pauli, abs(J), sign))
    # absorb rounding so the weights sum to one within 1e-12
    drift = 1.0 - sum(t.weight for t in terms)
    t0 = terms[0]
    terms[0] = Term(t0.qubits, t0.pauli, t0.weight + drift, t0.sign)
    if a is None or b is None:
        provisional = ZXHamiltonian(n, tuple(terms), -np.inf, np.inf)
        e0 = min_energy(provisional)[0]
        a = e0 if a is None else a
        b = a + DEFAULT_GAP if b is None else b
    return ZXHamiltonian(n, tuple(terms), float(a), float(b))


def with_thresholds(H: ZXHamiltonian, a: float, b: float) -> ZXHamiltonian:
    return ZXHamiltonian(H.n, H.terms, float(a), float(b))


# ---------------------------------------------------------------------------
# term sampling
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _thresholds(H: ZXHamiltonian, bits: int) -> tuple[int, ...]:
    # term t owns the fixed-point values u with T[t-1] < u <= T[t]
    scale = 1 << bits
    out, acc = [], Fraction(0)
    for t in H.terms:
        acc += Fraction(t.weight)
        out.append(min(int(acc * scale), scale - 1))
    out[-1] = scale - 1
    return tuple(out)


def _as_int(s, bits: int | None) -> tuple[int, int]:
    if isinstance(s, (bytes, bytearray)):
        if len(s) * 8 < TERM_RANDOMNESS_BITS:
            raise ValueError("term randomness must have at least 64 bits")
        return int.from_bytes(s, "big"), len(s) * 8
    return int(s), bits or TERM_RANDOMNESS_BITS


def sample_term_index(H: ZXHamiltonian, s, bits: int | None = None) -> int:
    value, width = _as_int(s, bits)
    if not 0 <= value < (1 << width):
        raise ValueError("randomness out of range")
    return bisect.bisect_left(_thresholds(H, width), value)


def sample_term(H: ZXHamiltonian, s, bits: int | None = None) -> Term:
    """Map randomness ``s`` (bytes, big-endian, or an int of ``bits`` bits) to a term."""
    return H.terms[sample_term_index(H, s, bits)]


def sample_term_indices(H: ZXHamiltonian, s: np.ndarray) -> np.ndarray:
    """Vectorized ``sample_term_index`` for an array of 64-bit draws (uint64)."""
    thresholds = np.array(_thresholds(H, TERM_RANDOMNESS_BITS), dtype=np.uint64)
    return np.searchsorted(thresholds, np.asarray(s, dtype=np.uint64), side="left")


def term_arrays(H: ZXHamiltonian) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(first qubit, second qubit, is_xx, sign) arrays aligned with ``H.terms``."""
    q1 = np.array([t.qubits[0] for t in H.terms])
    q2 = np.array([t.qubits[1] for t in H.terms])
    xx = np.array([t.pauli == "XX" for t in H.terms])
    sign = np.array([t.sign for t in H.terms])
    return q1, q2, xx, sign


# ---------------------------------------------------------------------------
# consistency and term checks
# ---------------------------------------------------------------------------


def is_consistent(S: Term, h: Sequence[int]) -> bool:
    i, j = S.qubits
    want = 1 if S.pauli == "XX" else 0
    return int(h[i]) == want and int(h[j]) == want


def term_satisfied(S: Term, e: Sequence[int]) -> bool:
    """True iff the decoded bits land in the ``-m_S`` eigenspace of ``S``."""
    return (int(e[0]) ^ int(e[1])) == (1 + S.sign) // 2


def conjugate_pad(H: ZXHamiltonian, beta: Sequence[int], gamma: Sequence[int]) -> ZXHamiltonian:
    """Hamiltonian seen by a state padded with ``X^beta Z^gamma``."""
    beta = np.asarray(beta, dtype=np.int64)
    gamma = np.asarray(gamma, dtype=np.int64)
    if beta.shape != (H.n,) or gamma.shape != (H.n,):
        raise InvalidInstance("pad length must equal n")
    terms = []
    for t in H.terms:
        i, j = t.qubits
        flip = (beta[i] ^ beta[j]) if t.pauli == "ZZ" else (gamma[i] ^ gamma[j])
        terms.append(Term(t.qubits, t.pauli, t.weight, -t.sign if flip else t.sign))
    return ZXHamiltonian(H.n, tuple(terms), H.a, H.b)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def _bit(idx: np.ndarray, n: int, q: int) -> np.ndarray:
    return (idx >> (n - 1 - q)) & 1


def _check_state(H: ZXHamiltonian, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != 1 << H.n:
        raise InvalidInstance(f"state dimension {psi.shape[-1]} != 2^{H.n}")
    norms = np.linalg.norm(psi, axis=-1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        raise InvalidInstance("state is not normalized")
    return psi


def energy(H: ZXHamiltonian, state: np.ndarray) -> float | np.ndarray:
    """``<psi|H|psi>``; a 2-D input is treated as a batch of states."""
    psi = _check_state(H, state)
    idx = np.arange(1 << H.n)
    probs = np.abs(psi) ** 2
    out = np.zeros(psi.shape[:-1])
    for t in H.terms:
        i, j = t.qubits
        if t.pauli == "ZZ":
            parity = _bit(idx, H.n, i) ^ _bit(idx, H.n, j)
            val = np.sum(probs * (1 - 2 * parity), axis=-1)
        else:
            flipped = idx ^ ((1 << (H.n - 1 - i)) | (1 << (H.n - 1 - j)))
            val = np.real(np.sum(np.conj(psi) * psi[..., flipped], axis=-1))
        out = out + t.sign * t.weight * val
    return float(out) if out.ndim == 0 else out


def mf_accept_probability(H: ZXHamiltonian, state: np.ndarray):
    return (1.0 - energy(H, state)) / 2.0


def to_matrix(H: ZXHamiltonian) -> np.ndarray:
    """Dense real matrix of ``H`` (capped at 12 qubits)."""
    if H.n > MAX_DENSE_QUBITS:
        raise InvalidInstance(f"dense diagonalization capped at {MAX_DENSE_QUBITS} qubits")
    dim = 1 << H.n
    idx = np.arange(dim)
    M = np.zeros((dim, dim))
    for t in H.terms:
        i, j = t.qubits
        c = t.sign * t.weight
        if t.pauli == "ZZ":
            parity = _bit(idx, H.n, i) ^ _bit(idx, H.n, j)
            M[idx, idx] += c * (1 - 2 * parity)
        else:
            flipped = idx ^ ((1 << (H.n - 1 - i)) | (1 << (H.n - 1 - j)))
            M[flipped, idx] += c
    return M


def spectrum(H: ZXHamiltonian) -> np.ndarray:
    return np.linalg.eigvalsh(to_matrix(H))


def min_energy(H: ZXHamiltonian) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(to_matrix(H))
    psi = vecs[:, 0].astype(complex)
    # fix the global phase so the largest component is real positive
    k = int(np.argmax(np.abs(psi)))
    psi *= np.exp(-1j * np.angle(psi[k]))
    return float(vals[0]), psi


def random_instance(n: int, rng: np.random.Generator, density: float = 0.6, gap: float = DEFAULT_GAP,
                    yes: bool = True) -> ZXHamiltonian:
    """Random Gaussian couplings on a random graph; thresholds straddle the ground energy."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        raise InvalidInstance("need n >= 2")
    couplings = {p: rng.normal() for p in pairs if rng.random() < density}
    if not couplings:
        couplings = {pairs[int(rng.integers(len(pairs)))]: rng.normal()}
    H = normalize(couplings, n=n, a=-1.0, b=1.0)
    e0 = min_energy(H)[0]
    if yes:
        return with_thresholds(H, e0 + 1e-9, e0 + 1e-9 + gap)
    return with_thresholds(H, e0 - 1e-9 - gap, e0 - 1e-9)
