"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

import golden
from literal_sim import literal_distribution, pooled_chisquare
from cvqc import protocol, qprover, zkp
from cvqc.analysis import (estimate, frustrated_triangle, hoeffding_bound, hoeffding_grid, lemma3_check,
                           promise_gap, repetitions_for, xxzz_pair)
from cvqc.encoding import u64_bytes
from cvqc.fiatshamir import (EchoVerifier, OneQueryAdversary, RandomOracle, derive_challenge, fs_bound, fs_verify,
                             reduction_sim)
from cvqc.funcfam import FamilyKind, KeyArray, gen
from cvqc.hamiltonian import conjugate_pad, random_instance, spectrum
from cvqc.protocol import Transcript, evaluate_verdict, instance_digest, setup_digest

pytestmark = pytest.mark.acceptance


# --- 1: prover simulator against the literal full-register simulation -----


def _sample(psi, pairs, hadamard, N, rng):
    n = len(pairs)
    keys = KeyArray.from_keypairs(pairs).tile(N)
    cs, y = qprover.commit(qprover.WitnessState(n, np.tile(psi, (N, 1))), keys, rng)
    w, t = (qprover.measure_hadamard if hadamard else qprover.measure_test)(cs, rng)
    return Counter(zip(map(tuple, y.tolist()), map(tuple, w.tolist()), map(tuple, t.tolist())))


def _marginal(dist, pick):
    out = Counter()
    for key, p in dist.items():
        out[pick(key)] += p
    return out


def test_criterion_1_literal_simulator(criterion):
    rng = np.random.default_rng(2024)
    N = 10**4
    results = []
    for n, w in itertools.product((1, 2), (2, 3, 4)):
        for kinds in itertools.product((0, 1), repeat=n):
            pairs = [gen(FamilyKind(k), w, rng) for k in kinds]
            v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            psi = v / np.linalg.norm(v)
            for hadamard in (False, True):
                exact = literal_distribution(psi, [p.pk for p in pairs], hadamard)
                obs = _sample(psi, pairs, hadamard, N, rng)
                p_joint = pooled_chisquare(exact, obs, N)
                p_y = pooled_chisquare(_marginal(exact, lambda k: k[0]), _marginal(obs, lambda k: k[0]), N)
                p_u = pooled_chisquare(_marginal(exact, lambda k: k[1:]), _marginal(obs, lambda k: k[1:]), N)
                results.append(((n, w, kinds, hadamard), min(p_joint, p_y, p_u)))
    worst_cfg, worst_p = min(results, key=lambda r: r[1])
    ok = worst_p > 0.001
    criterion(1, "prover simulator matches literal simulation", ok,
              f"{len(results)} configs, min p={worst_p:.4f} at {worst_cfg}")
    assert ok


# --- 2: completeness ------------------------------------------------------


def test_criterion_2_completeness(criterion):
    H = xxzz_pair()
    g = promise_gap(H.a, H.b)
    r = repetitions_for(g, 0.05)
    assert hoeffding_bound(r, g) <= 0.05
    rep = estimate("interactive", H, {"lam": 8, "r": r, "k": 3}, "honest", 200, seed=2)
    ok = rep.rate >= 0.90
    criterion(2, "honest completeness", ok, f"r={r}, k=3, rate={rep.rate:.3f} over 200 runs")
    assert ok


# --- 3: parallel-repetition floor -----------------------------------------


def test_criterion_3_repetition_floor(criterion):
    H = frustrated_triangle()
    trials = 10**4
    parts, ok = [], True
    for k in range(1, 7):
        rep = estimate("interactive", H, {"lam": 8, "r": 128, "k": k}, "test-only", trials, seed=30 + k)
        ref = 2.0 ** -k
        within = abs(rep.rate - ref) <= 3 * math.sqrt(ref * (1 - ref) / trials)
        ok &= within
        parts.append(f"k={k}:{rep.rate:.4f}")
    ctq = estimate("ctq", None, {"lam": 8, "k": 1}, "test-only", trials, seed=37)
    ctq_ok = abs(ctq.rate - 0.5) <= 3 * math.sqrt(0.25 / trials)
    ok &= ctq_ok
    parts.append(f"ctq k=1:{ctq.rate:.4f}")
    criterion(3, "test-only acceptance tracks 2^-k", ok, ", ".join(parts))
    assert ok


# --- 4: Hoeffding grid ----------------------------------------------------


def test_criterion_4_hoeffding_grid(criterion):
    points = hoeffding_grid()
    bad = [(p.r, p.g) for p in points if not p.ok]
    ok = len(points) == 20 and not bad
    worst = max(points, key=lambda p: max(p.completeness_error, p.soundness_error) - p.bound)
    criterion(4, "modified MF error within the Hoeffding bound", ok,
              f"{len(points)} points, failing={bad}, tightest r={worst.r} g={worst.g}")
    assert ok


# --- 5: projector lemma ---------------------------------------------------


def test_criterion_5_projector_lemma(criterion):
    rep = lemma3_check(8, 4, 10**4, np.random.default_rng(5))
    ok = rep.violations == 0
    criterion(5, "projector-sum bound", ok,
              f"violations={rep.violations}, max excess={rep.max_excess:.3g}, clamped={rep.clamped_low}"
              f"/{rep.clamped_high}")
    assert ok


# --- 6: Fiat-Shamir equivalence and tampering -----------------------------


def _flip_bit(data: dict, rng) -> dict:
    out = json.loads(json.dumps(data))
    name = ("y", "c", "w", "t")[int(rng.integers(4))]
    raw = bytearray.fromhex(out[name])
    bit = int(rng.integers(8 * len(raw)))
    raw[bit // 8] ^= 1 << (7 - bit % 8)
    out[name] = raw.hex()
    return out


def test_criterion_6_fs_equivalence_and_tampering(criterion):
    H = xxzz_pair()
    sessions = golden.load()
    x = instance_digest(H)
    agree = regenerated = 0
    setups = {}
    for entry in sessions:
        vs, ps = setups[entry["seed"]] = golden.regenerate_setup(entry["seed"])
        tr = Transcript.from_json(entry["transcript"])
        derived = derive_challenge(RandomOracle(), x, setup_digest(ps.pk), u64_bytes(tr.y), vs.params.k)
        interactive = np.array_equal(derived, tr.c) and evaluate_verdict(H, vs.s, vs.keys, tr.y, derived, tr.u).accept
        agree += fs_verify(H, vs, tr, RandomOracle()) == interactive
        regenerated += golden.session(entry["seed"], entry["strategy"])[1].digest().hex() == entry["digest"]
    rng = np.random.default_rng(6)
    accepted = [e for e in sessions if e["transcript"]["decision"]]
    tampers, rejected, deep = 1000, 0, 0
    for _ in range(tampers):
        entry = accepted[int(rng.integers(len(accepted)))]
        vs, _ = setups[entry["seed"]]
        data = _flip_bit(entry["transcript"], rng)
        rejected += not fs_verify(H, vs, Transcript.from_json(data), RandomOracle())
        # informational: same tamper with the transcript digest recomputed by the attacker
        resigned = Transcript.from_json({**data, "digest": None})
        deep += not fs_verify(H, vs, resigned, RandomOracle())
    ok = agree == len(sessions) and regenerated == len(sessions) and rejected == tampers
    criterion(6, "FS equivalence and tamper rejection", ok,
              f"agree {agree}/{len(sessions)}, golden digests {regenerated}/{len(sessions)}, "
              f"tampers rejected {rejected}/{tampers} (verdict and challenge alone: {deep}/{tampers})")
    assert ok


# --- 7: reprogramming reduction -------------------------------------------


def test_criterion_7_fs_reduction(criterion):
    rng = np.random.default_rng(7)
    trials = 10**4
    wins = sum(reduction_sim(OneQueryAdversary(42), EchoVerifier(32), 1, rng).success for _ in range(trials))
    rate = wins / trials
    bound = fs_bound(1, 2**32, 1)
    sigma = math.sqrt(rate * (1 - rate) / trials)
    ok = rate >= bound - 3 * sigma
    criterion(7, "reduction success above the reprogramming bound", ok, f"rate={rate:.4f}, bound={bound:.4f}")
    assert ok


# --- 8: zero knowledge ----------------------------------------------------


def _relation(H, zs, tr):
    return zkp.verdict_prime(zkp.instance_of(H, zs.st_V, tr), tr.tau)


def test_criterion_8_zero_knowledge(criterion, monkeypatch):
    H = xxzz_pair()
    runs = 300
    honest = simulated = 0
    for i in range(runs):
        rng = np.random.default_rng([8, i])
        zs = zkp.setup_zk(8, 2, 64, 3, rng)
        tr = zkp.zk_prove(H, zs.st_P, zs.st_V.keys, zkp.uniform_challenges(3, rng), rng)
        honest += zkp.zk_verify(zs.st_V, H, tr) and _relation(H, zs, tr)
        sim = zkp.simulate(H, zs, zkp.uniform_challenges(3, rng), rng)
        simulated += _relation(H, zs, sim)
    rate_gap = abs(honest - simulated) / runs
    rates_ok = rate_gap <= 0.05

    # per-qubit y marginals, one fixed setup, w = 8
    rng = np.random.default_rng(80)
    zs = zkp.setup_zk(8, 2, 1, 1, rng)
    samples = 10**4
    ys_honest = np.array([zkp.zk_prove(H, zs.st_P, zs.st_V.keys, zkp.uniform_challenges(1, rng), rng).y
                          for _ in range(samples)])
    ys_sim = np.array([zkp.simulate(H, zs, zkp.uniform_challenges(1, rng), rng).y for _ in range(samples)])
    pvals = []
    for q in range(ys_honest.shape[1]):
        values = np.union1d(ys_honest[:, q], ys_sim[:, q])
        table = np.array([[np.sum(col == v) for v in values] for col in (ys_honest[:, q], ys_sim[:, q])])
        pvals.append(stats.chi2_contingency(table).pvalue)
    marg_ok = min(pvals) > 0.01

    # structural: the simulator runs with every quantum-prover entry point disabled
    def forbidden(*args, **kwargs):
        raise AssertionError("simulator touched the witness")

    for name in ("commit", "measure_test", "measure_hadamard", "prepare_witness", "pad"):
        monkeypatch.setattr(qprover, name, forbidden)
        monkeypatch.setattr(protocol, name, forbidden, raising=False)
    monkeypatch.setattr(zkp, "HonestProver", forbidden)
    rng = np.random.default_rng(81)
    zs = zkp.setup_zk(8, 2, 16, 3, rng)
    structural = _relation(H, zs, zkp.simulate(H, zs, zkp.uniform_challenges(3, rng), rng))
    structural &= not set(zkp.simulate.__code__.co_names) & {"HonestProver", "WitnessState", "qprover"}

    ok = rates_ok and marg_ok and structural
    criterion(8, "zero-knowledge simulation", ok,
              f"honest {honest}/{runs}, simulated {simulated}/{runs}, y-marginal p={[round(float(p), 3) for p in pvals]}, "
              f"structural={structural}")
    assert ok


# --- 9: spectrum invariance -----------------------------------------------


def _dense(H):
    X, Z, I2 = np.array([[0, 1], [1, 0]]), np.diag([1, -1]), np.eye(2)
    M = np.zeros((1 << H.n, 1 << H.n))
    for t in H.terms:
        op = np.array([[1.0]])
        for q in range(H.n):
            op = np.kron(op, (X if t.pauli == "XX" else Z) if q in t.qubits else I2)
        M += t.sign * t.weight * op
    return M


def test_criterion_9_spectrum_invariance(criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        H = random_instance(n, rng)
        beta, gamma = rng.integers(0, 2, size=n), rng.integers(0, 2, size=n)
        Hp = conjugate_pad(H, beta, gamma)
        base = np.linalg.eigvalsh(_dense(H))
        worst = max(worst, np.abs(np.linalg.eigvalsh(_dense(Hp)) - base).max(),
                    np.abs(np.sort(spectrum(Hp)) - base).max())
    ok = worst <= 1e-9
    criterion(9, "padding preserves the spectrum", ok, f"max eigenvalue deviation {worst:.2e}")
    assert ok
