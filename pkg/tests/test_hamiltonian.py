from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cvqc.hamiltonian import (InvalidInstance, Term, ZXHamiltonian, conjugate_pad, energy, is_consistent,
                              mf_accept_probability, min_energy, normalize, random_instance, sample_term,
                              sample_term_index, sample_term_indices, spectrum, term_satisfied, to_matrix)

X = np.array([[0, 1], [1, 0]], dtype=float)
Z = np.diag([1.0, -1.0])
I2 = np.eye(2)


def pauli_pair(n, i, j, P):
    # independent oracle: explicit Kronecker products, qubit 0 leftmost
    out = np.array([[1.0]])
    for q in range(n):
        out = np.kron(out, P if q in (i, j) else I2)
    return out


def dense_oracle(H):
    M = np.zeros((1 << H.n, 1 << H.n))
    for t in H.terms:
        M += t.sign * t.weight * pauli_pair(H.n, *t.qubits, X if t.pauli == "XX" else Z)
    return M


XXZZ = normalize({(0, 1): 1.0}, n=2, a=-0.95, b=-0.55)


def weights_by_pair(H):
    out = {}
    for t in H.terms:
        out.setdefault(t.qubits, t.sign * t.weight)
    return out


# --- normalize -------------------------------------------------------------


def test_normalize_single_coupling():
    H = normalize({(0, 1): 2.0}, a=-1, b=0)
    assert weights_by_pair(H) == {(0, 1): 0.5}
    assert [t.pauli for t in H.terms] == ["ZZ", "XX"]


def test_normalize_symmetric_pair():
    H = normalize({(0, 1): 1, (0, 2): 1}, a=-1, b=0)
    assert weights_by_pair(H) == {(0, 1): 0.25, (0, 2): 0.25}


@pytest.mark.parametrize("couplings", [{}, {(0, 1): 0.0}])
def test_normalize_rejects_degenerate(couplings):
    with pytest.raises(InvalidInstance):
        normalize(couplings)


def test_normalize_rejects_self_coupling():
    with pytest.raises(InvalidInstance):
        normalize({(1, 1): 1.0})


def test_default_thresholds_from_ground_energy():
    H = normalize({(0, 1): 1.0})
    assert H.a == pytest.approx(-1.0)
    assert H.b == pytest.approx(-0.6)


def test_canonical_order_and_signs():
    H = normalize({(1, 2): -3.0, (0, 2): 1.0}, a=-1, b=0)
    assert [t.key for t in H.terms] == sorted(t.key for t in H.terms)
    assert [t.sign for t in H.terms] == [1, 1, -1, -1]


@given(st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda p: p[0] != p[1]),
                       st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=8))
def test_weights_sum_to_one(couplings):
    H = normalize(couplings, n=5, a=-1, b=0)
    assert abs(H.weights().sum() - 1.0) <= 1e-12


def test_json_round_trip():
    H = random_instance(4, np.random.default_rng(3))
    back = ZXHamiltonian.from_json(H.to_json())
    assert (back.n, back.a, back.b) == (H.n, H.a, H.b)
    assert [(t.key, t.sign) for t in back.terms] == [(t.key, t.sign) for t in H.terms]
    np.testing.assert_allclose(back.weights(), H.weights(), rtol=0, atol=1e-15)


def test_bad_thresholds_rejected():
    with pytest.raises(InvalidInstance):
        normalize({(0, 1): 1.0}, a=0.1, b=0.1)


# --- term sampling ---------------------------------------------------------


def test_sample_term_zero_is_first():
    assert sample_term(XXZZ, bytes(8)).pauli == "ZZ"


def test_sample_term_three_quarters_is_xx():
    assert sample_term(XXZZ, (3 << 62).to_bytes(8, "big")).pauli == "XX"


def test_sample_term_boundary_goes_low():
    # u exactly at the CDF boundary 0.5 belongs to the first term
    assert sample_term_index(XXZZ, 1 << 63, bits=64) == 0
    assert sample_term_index(XXZZ, (1 << 63) + 1, bits=64) == 1


def test_sample_term_needs_64_bits():
    with pytest.raises(ValueError):
        sample_term(XXZZ, bytes(7))


def test_vectorized_matches_scalar():
    H = random_instance(5, np.random.default_rng(1))
    s = np.random.default_rng(2).integers(0, 2**64 - 1, size=500, dtype=np.uint64, endpoint=True)
    assert [sample_term_index(H, int(v)) for v in s] == sample_term_indices(H, s).tolist()


def test_sample_term_frequencies():
    H = normalize({(0, 1): 1, (2, 3): 1}, a=-1, b=0)
    rng = np.random.default_rng(7)
    s = rng.integers(0, 2**64 - 1, size=10**5, dtype=np.uint64, endpoint=True)
    freq = np.bincount(sample_term_indices(H, s), minlength=4) / s.size
    assert np.all(np.abs(freq - 0.25) <= 0.01)


def test_sample_term_marginal_chisquare():
    H = random_instance(5, np.random.default_rng(11), density=0.8)
    rng = np.random.default_rng(12)
    s = rng.integers(0, 2**64 - 1, size=10**5, dtype=np.uint64, endpoint=True)
    obs = np.bincount(sample_term_indices(H, s), minlength=len(H.terms))
    assert stats.chisquare(obs, H.weights() * s.size).pvalue > 0.001


# --- consistency and satisfaction -----------------------------------------


def test_consistency_examples():
    assert is_consistent(Term((0, 1), "XX", 0.5, 1), [1, 1, 0])
    assert not is_consistent(Term((0, 1), "ZZ", 0.5, 1), [1, 0, 0])


def test_consistency_rate_quarter():
    rng = np.random.default_rng(5)
    terms = [Term((0, 2), p, 0.5, 1) for p in ("XX", "ZZ")]
    hits = sum(is_consistent(terms[i % 2], rng.integers(0, 2, size=3)) for i in range(10**5))
    assert abs(hits / 10**5 - 0.25) <= 0.01


@pytest.mark.parametrize("pauli", ["XX", "ZZ"])
@pytest.mark.parametrize("sign", [1, -1])
def test_term_satisfied_projector_oracle(pauli, sign):
    # in the measured basis the term is diagonal: ZZ on bits, XX on Hadamard-basis bits
    S = Term((0, 1), pauli, 1.0, sign)
    proj = (np.eye(4) - sign * np.kron(Z, Z)) / 2
    for e in range(4):
        bits = (e >> 1, e & 1)
        assert term_satisfied(S, bits) == bool(proj[e, e] > 0.5)


def test_term_satisfied_examples():
    assert term_satisfied(Term((0, 1), "ZZ", 1.0, 1), (0, 1))
    assert term_satisfied(Term((0, 1), "XX", 1.0, -1), (0, 0))


# --- energies -------------------------------------------------------------


def test_energy_examples():
    psi00 = np.array([1, 0, 0, 0], dtype=complex)
    assert energy(XXZZ, psi00) == pytest.approx(0.5)
    assert mf_accept_probability(XXZZ, psi00) == pytest.approx(0.25)
    e0, ground = min_energy(XXZZ)
    assert e0 == pytest.approx(-1.0)
    assert mf_accept_probability(XXZZ, ground) == pytest.approx(1.0)


def test_maximally_mixed_energy_zero():
    H = random_instance(4, np.random.default_rng(9))
    basis = np.eye(16, dtype=complex)
    assert np.mean(energy(H, basis)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_matrix_matches_kron_oracle(seed):
    rng = np.random.default_rng(seed)
    H = random_instance(4, rng)
    np.testing.assert_allclose(to_matrix(H), dense_oracle(H), atol=1e-12)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    assert energy(H, psi) == pytest.approx(np.real(psi.conj() @ dense_oracle(H) @ psi), abs=1e-12)


def test_energy_rejects_bad_states():
    with pytest.raises(InvalidInstance):
        energy(XXZZ, np.ones(4))
    with pytest.raises(InvalidInstance):
        energy(XXZZ, np.ones(8) / np.sqrt(8))


def test_mf_monte_carlo_matches_formula():
    # one MF round: sample a term, measure it on the state, accept on the -m_S eigenspace
    rng = np.random.default_rng(21)
    H = random_instance(3, rng)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    trials = 10**4
    idx = sample_term_indices(H, rng.integers(0, 2**64 - 1, size=trials, dtype=np.uint64, endpoint=True))
    acc = 0
    for t_idx in idx:
        t = H.terms[t_idx]
        P = pauli_pair(3, *t.qubits, X if t.pauli == "XX" else Z)
        p_acc = np.real(psi.conj() @ ((np.eye(8) - t.sign * P) / 2) @ psi)
        acc += rng.random() < p_acc
    p = mf_accept_probability(H, psi)
    assert abs(acc / trials - p) <= 3 * np.sqrt(p * (1 - p) / trials)


def test_yes_no_promises():
    rng = np.random.default_rng(4)
    yes = random_instance(4, rng, yes=True)
    no = random_instance(4, rng, yes=False)
    assert mf_accept_probability(yes, min_energy(yes)[1]) >= (1 - yes.a) / 2 - 1e-12
    assert (1 - spectrum(no)[0]) / 2 <= (1 - no.b) / 2 + 1e-12


def test_dense_cap():
    H = normalize({(0, 12): 1.0}, n=13, a=-1, b=0)
    with pytest.raises(InvalidInstance):
        spectrum(H)


# --- pads -----------------------------------------------------------------


def test_pad_identity():
    H = random_instance(4, np.random.default_rng(2))
    assert conjugate_pad(H, [0] * 4, [0] * 4) == H


def test_pad_flips_zz_explicitly():
    Hp = conjugate_pad(XXZZ, [1, 0], [0, 0])
    assert [(t.pauli, t.sign) for t in Hp.terms] == [("ZZ", -1), ("XX", 1)]
    Xb = np.kron(X, I2)
    np.testing.assert_allclose(to_matrix(Hp), Xb @ to_matrix(XXZZ) @ Xb, atol=1e-12)


def test_pad_length_checked():
    with pytest.raises(InvalidInstance):
        conjugate_pad(XXZZ, [1], [0, 0])


@given(st.integers(0, 2**32 - 1))
def test_pad_matches_unitary_conjugation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    H = random_instance(n, rng)
    beta, gamma = rng.integers(0, 2, size=n), rng.integers(0, 2, size=n)
    U = np.array([[1.0]])
    for q in range(n):
        U = np.kron(U, np.linalg.matrix_power(X, beta[q]) @ np.linalg.matrix_power(Z, gamma[q]))
    Hp = conjugate_pad(H, beta, gamma)
    np.testing.assert_allclose(to_matrix(Hp), U @ to_matrix(H) @ U.T, atol=1e-12)
    assert conjugate_pad(Hp, beta, gamma) == H
    np.testing.assert_allclose(spectrum(Hp), spectrum(H), atol=1e-9)
