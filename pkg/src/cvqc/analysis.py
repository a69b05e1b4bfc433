"""Monte Carlo estimators, canonical classical cheating strategies and numeric bound checks.

Classical strategies only ever see a ``PublicView``: the instance, public
keys and dimensions.  They evaluate the public function family and never
touch statevectors, claws or trapdoors.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .fiatshamir import RandomOracle, fs_prove
from .hamiltonian import (ZXHamiltonian, min_energy, normalize, sample_term_indices, term_arrays,
                          with_thresholds)
from .protocol import HonestProver, PublicView, Strategy, run_ctq, run_interactive, setup, setup_ctq

MIN_TRIALS = 100
MAX_CURVE_K = 10
MAX_LEMMA_DIM = 64
MAX_LEMMA_M = 16
LEMMA_TOL = 1e-9
DEFAULT_CTQ_WIDTH = 8
MODES = ("interactive", "fs", "ctq")


# ---------------------------------------------------------------------------
# classical strategies
# ---------------------------------------------------------------------------


def zz_optimal_bits(H: ZXHamiltonian | None, n: int) -> np.ndarray:
    """Bit string maximizing the weight of satisfied ZZ terms (brute force over 2^n)."""
    if H is None:
        return np.zeros(n, dtype=np.int64)
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    score = np.zeros(1 << n)
    for t in H.terms:
        if t.pauli != "ZZ":
            continue
        i, j = t.qubits
        score += t.weight * ((bits[:, i] ^ bits[:, j]) == (1 + t.sign) // 2)
    return bits[int(np.argmax(score))].astype(np.int64)


class ClassicalStrategy(Strategy):
    """Shared plumbing: honest evaluation of chosen ``(b, x)`` under the public keys."""

    def _evaluate(self, view: PublicView, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        self._view = view
        self._b = np.asarray(b, dtype=np.int64).ravel()
        self._x = view.pk.sample_domain(rng)
        return view.pk.eval(self._b, self._x)

    def _hadamard_noise(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        w = rng.integers(0, 2, size=self._b.shape[0])
        return w.astype(np.int64), self._view.pk.sample_nonzero(rng)


class TestOnly(ClassicalStrategy):
    """Commit to random bits honestly and always answer as if ``c = 0``."""

    name = "test-only"

    def commit(self, view, rng):
        return self._evaluate(view, rng.integers(0, 2, size=view.pk.kinds.shape[0]), rng)

    def respond(self, c, rng):
        return self._b.copy(), self._x.copy()


class GuessChallenge(ClassicalStrategy):
    """Precommit to a guessed challenge; answers are fixed before ``c`` is seen.

    Groups guessed as test rounds commit random bits and answer with the
    preimages.  Groups guessed as Hadamard rounds commit the ZZ-optimal
    classical assignment and answer with random ``w`` and nonzero ``t``.
    """

    name = "guess-challenge"

    def __init__(self, guess=None):
        self.guess = guess

    def _groups(self, view, rng) -> np.ndarray:
        if self.guess is not None:
            return np.asarray(self.guess, dtype=np.int64)
        return rng.integers(0, 2, size=view.k)

    def commit(self, view, rng):
        g = self._groups(view, rng)
        self._guess = g
        b = rng.integers(0, 2, size=(view.k, view.r, view.n))
        b[g == 1] = zz_optimal_bits(view.H, view.n)
        y = self._evaluate(view, b, rng)
        wn, tn = self._hadamard_noise(rng)
        had = np.repeat(g, view.r * view.n) == 1
        self._answer = np.where(had, wn, self._b), np.where(had, tn, self._x)
        return y

    def respond(self, c, rng):
        return self._answer[0].copy(), self._answer[1].copy()


class HalfSplit(GuessChallenge):
    """Answer the first ``ceil(k/2)`` groups as test rounds and the rest as Hadamard rounds."""

    name = "half-split"

    def _groups(self, view, rng):
        g = np.zeros(view.k, dtype=np.int64)
        g[(view.k + 1) // 2:] = 1
        return g


class RandomNoise(ClassicalStrategy):
    """Uniform images and uniform answers; no use of the function family at all."""

    name = "random-noise"

    def commit(self, view, rng):
        N = view.pk.kinds.shape[0]
        self._b = rng.integers(0, 2, size=N)
        self._x = view.pk.sample_domain(rng)
        return rng.integers(0, 1 << 40, size=N, dtype=np.uint64)

    def respond(self, c, rng):
        return self._b.copy(), self._x.copy()


CLASSICAL_STRATEGIES = {cls.name: cls for cls in (TestOnly, GuessChallenge, HalfSplit, RandomNoise)}
STRATEGY_NAMES = ("honest",) + tuple(CLASSICAL_STRATEGIES)


def make_strategy(name: str, state: np.ndarray | None = None) -> Strategy:
    if name == "honest":
        return HonestProver(state)
    try:
        return CLASSICAL_STRATEGIES[name]()
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGY_NAMES)}") from None


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


@dataclass
class EstimateReport:
    mode: str
    strategy: str
    trials: int
    successes: int
    rate: float
    stderr: float
    bound: float | None = None
    bound_kind: str = "upper"
    verdict: bool | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, mode: str, strategy: str, trials: int, successes: int, bound: float | None = None,
                    bound_kind: str = "upper", sigmas: float = 3.0, **extra) -> "EstimateReport":
        rate = successes / trials
        stderr = math.sqrt(rate * (1.0 - rate) / trials)
        verdict = None
        if bound is not None:
            # a zero-variance estimate still gets one binomial quantum of slack
            slack = sigmas * max(stderr, 1.0 / trials)
            verdict = rate <= bound + slack if bound_kind == "upper" else rate >= bound - slack
        return cls(mode, strategy, trials, successes, rate, stderr, bound, bound_kind, verdict, dict(extra))

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EstimateConfig:
    mode: str
    lam: int
    n: int
    r: int
    k: int
    backend: str = "mock"
    width: int = DEFAULT_CTQ_WIDTH


def _one_trial(H, cfg: EstimateConfig, strategy, seed: int, trial: int) -> tuple[bool, int]:
    rng = np.random.default_rng([seed, trial])
    prover = make_strategy(strategy) if isinstance(strategy, str) else strategy()
    if cfg.mode == "ctq":
        tr = run_ctq(setup_ctq(cfg.lam, cfg.width, cfg.k, rng, cfg.backend), prover, rng)
    elif cfg.mode == "fs":
        tr = fs_prove(H, setup(cfg.lam, cfg.n, cfg.r, cfg.k, rng, cfg.backend), prover, RandomOracle(), rng)
    else:
        tr = run_interactive(H, setup(cfg.lam, cfg.n, cfg.r, cfg.k, rng, cfg.backend), prover, rng)
    empty = tr.detail.empty_hadamard_groups if tr.detail is not None else 0
    return bool(tr.decision), int(empty > 0)


def _trial_block(args) -> tuple[int, int]:
    H, cfg, strategy, seed, lo, hi = args
    acc = emp = 0
    for trial in range(lo, hi):
        a, e = _one_trial(H, cfg, strategy, seed, trial)
        acc += a
        emp += e
    return acc, emp


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CVQC_THREADS", "1")))
    except ValueError:
        return 1


def estimate(mode: str, H: ZXHamiltonian | None, params: dict, strategy: str | Callable[[], Strategy],
             trials: int, seed: int, bound: float | None = None, bound_kind: str = "upper") -> EstimateReport:
    """Acceptance rate of ``strategy`` over ``trials`` independent sessions.

    Trial ``i`` draws all randomness (setup, prover, challenge) from
    ``default_rng([seed, i])``, so the report does not depend on how trials
    are scheduled across workers.  ``params`` holds ``lam, n, r, k`` and
    optionally ``backend`` and ``width`` (ctq mode).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    if mode != "ctq" and H is None:
        raise ValueError(f"mode {mode!r} needs an instance")
    n = H.n if H is not None else params.get("width", DEFAULT_CTQ_WIDTH)
    cfg = EstimateConfig(mode, int(params["lam"]), int(params.get("n", n)), int(params.get("r", 1)),
                         int(params["k"]), params.get("backend", "mock"),
                         int(params.get("width", DEFAULT_CTQ_WIDTH)))
    workers = thread_count()
    if workers > 1 and isinstance(strategy, str):
        step = -(-trials // workers)
        blocks = [(H, cfg, strategy, seed, lo, min(trials, lo + step)) for lo in range(0, trials, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_trial_block, blocks))
    else:
        parts = [_trial_block((H, cfg, strategy, seed, 0, trials))]
    acc = sum(p[0] for p in parts)
    emp = sum(p[1] for p in parts)
    name = strategy if isinstance(strategy, str) else getattr(strategy, "name", "custom")
    return EstimateReport.from_counts(mode, name, trials, acc, bound, bound_kind,
                                      empty_hadamard_rate=emp / trials, seed=seed, config=asdict(cfg))


# ---------------------------------------------------------------------------
# Hoeffding bound for the modified MF protocol
# ---------------------------------------------------------------------------


def hoeffding_bound(r: int, g: float) -> float:
    """``2 exp(-r g^2 / 16)``: error bound of the modified MF protocol with ``r`` copies and gap ``g``."""
    if r < 1:
        raise ValueError("need r >= 1")
    if not 0 <= g <= 1:
        raise ValueError("need g in [0, 1]")
    return 2.0 * math.exp(-r * g * g / 16.0)


def repetitions_for(g: float, target: float) -> int:
    """Smallest ``r`` with ``hoeffding_bound(r, g) <= target``."""
    if not 0 < g <= 1 or not 0 < target:
        raise ValueError("need g in (0, 1] and target > 0")
    r = max(1, math.ceil(16.0 * math.log(2.0 / target) / (g * g)))
    while r > 1 and hoeffding_bound(r - 1, g) <= target:
        r -= 1
    while hoeffding_bound(r, g) > target:
        r += 1
    return r


def promise_gap(a: float, b: float) -> float:
    """Gap between per-copy acceptance probabilities, ``(1-a)/2 - (1-b)/2``."""
    return (b - a) / 2.0


def _basis_tables(state: np.ndarray, n: int) -> np.ndarray:
    """Outcome distributions of measuring ``state`` in every basis string ``h`` (h bit 1 = X)."""
    psi = np.asarray(state, dtype=complex)
    hmat = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    tables = np.empty((1 << n, 1 << n))
    for hidx in range(1 << n):
        v = psi.reshape((2,) * n)
        for q in range(n):
            if (hidx >> (n - 1 - q)) & 1:
                v = np.moveaxis(np.tensordot(hmat, v, axes=([1], [q])), 0, q)
        tables[hidx] = np.abs(v.ravel()) ** 2
    return tables / tables.sum(axis=1, keepdims=True)


def modified_mf_accept(H: ZXHamiltonian, state: np.ndarray, r: int, trials: int, rng: np.random.Generator,
                       a: float | None = None, b: float | None = None) -> np.ndarray:
    """Accept decisions of ``trials`` runs of the modified MF protocol with ``r`` copies of ``state``.

    Each copy gets uniform bases ``h`` and a sampled term; copies whose bases
    match the term are measured in ``h`` and the run accepts when at least
    ``(2 - a - b)/4`` of them satisfy their term (no consistent copy: accept).
    """
    a = H.a if a is None else a
    b = H.b if b is None else b
    n = H.n
    tables = _basis_tables(state, n)
    cdf = np.cumsum(tables, axis=1)
    shape = (trials, r)
    h = rng.integers(0, 1 << n, size=shape)
    s = rng.integers(0, (1 << 64) - 1, size=shape, dtype=np.uint64, endpoint=True)
    term = sample_term_indices(H, s.ravel()).reshape(shape)
    q1, q2, xx, sign = (arr[term] for arr in term_arrays(H))
    hb1 = (h >> (n - 1 - q1)) & 1
    hb2 = (h >> (n - 1 - q2)) & 1
    consistent = np.where(xx, (hb1 == 1) & (hb2 == 1), (hb1 == 0) & (hb2 == 0))
    u = rng.random(shape)
    outcome = np.minimum((cdf[h] <= u[..., None]).sum(axis=-1), (1 << n) - 1)
    e1 = (outcome >> (n - 1 - q1)) & 1
    e2 = (outcome >> (n - 1 - q2)) & 1
    sat = consistent & ((e1 ^ e2) == (1 + sign) // 2)
    counts = consistent.sum(axis=1)
    return sat.sum(axis=1) >= (2.0 - a - b) * counts / 4.0 - 1e-9


def energy_state(theta: float) -> np.ndarray:
    """``cos(theta)|singlet> + sin(theta)|Phi+>``; energy ``-cos(2 theta)`` under ``(XX+ZZ)/2``."""
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return (np.cos(theta) * singlet + np.sin(theta) * phi).astype(complex)


def state_with_energy(E: float) -> np.ndarray:
    if not -1 <= E <= 1:
        raise ValueError("energy must lie in [-1, 1]")
    return energy_state(0.5 * math.acos(-E))


@dataclass
class GridPoint:
    r: int
    g: float
    a: float
    b: float
    completeness_error: float
    soundness_error: float
    stderr: float
    bound: float
    ok: bool


def hoeffding_grid(rs=(20, 50, 100, 200, 400), gs=(0.1, 0.2, 0.3, 0.4), trials: int = 4000, seed: int = 0,
                   a: float = -0.8) -> list[GridPoint]:
    """Empirical modified-MF errors on ``(XX+ZZ)/2`` against the Hoeffding bound.

    Completeness uses a state of energy exactly ``a``; soundness a state of
    energy exactly ``b = a + 2g`` (the worst no-instance witness).
    """
    base = normalize({(0, 1): 1.0}, n=2, a=-1.0, b=1.0)
    out = []
    for r in rs:
        for g in gs:
            b = a + 2 * g
            H = with_thresholds(base, a, b)
            rng = np.random.default_rng([seed, r, int(round(g * 1000))])
            yes = modified_mf_accept(H, state_with_energy(a), r, trials, rng)
            no = modified_mf_accept(H, state_with_energy(b), r, trials, rng)
            ce = 1.0 - yes.mean()
            se = no.mean()
            worst = max(ce, se)
            stderr = math.sqrt(max(worst * (1 - worst), 1.0 / trials) / trials)
            bound = hoeffding_bound(r, g)
            out.append(GridPoint(r, g, a, b, float(ce), float(se), stderr, bound, bool(worst <= bound + 3 * stderr)))
    return out


# ---------------------------------------------------------------------------
# projector lemma
# ---------------------------------------------------------------------------


@dataclass
class LemmaReport:
    dim: int
    m_max: int
    trials: int
    violations: int
    clamped_low: int
    clamped_high: int
    degenerate: int
    max_excess: float
    worst: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["ok"] = self.ok
        return out


def random_projector(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(g)
    v = q[:, :rank]
    return v @ v.conj().T


def random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def lemma_sides(projectors, psi) -> tuple[float, float, int, int]:
    """``(lhs, rhs, clamped_low, clamped_high)`` for one instance with ``delta_ij`` clamped to [0, 2]."""
    m = len(projectors)
    vecs = [P @ psi for P in projectors]
    lhs = float(sum(np.real(np.vdot(psi, v)) for v in vecs))
    total, low, high = 0.0, 0, 0
    for i in range(m):
        for j in range(i + 1, m):
            # <psi|A_i A_j + A_j A_i|psi> = 2 Re <A_i psi, A_j psi>
            d = 2.0 * float(np.real(np.vdot(vecs[i], vecs[j])))
            if d < 0:
                d, low = 0.0, low + 1
            elif d > 2:
                d, high = 2.0, high + 1
            total += d
    return lhs, 1.0 + math.sqrt(total), low, high


def lemma3_check(dim: int, m: int, trials: int, rng: np.random.Generator, orthogonal: bool = False) -> LemmaReport:
    """Random projector tuples (``1..m`` of them) and unit vectors against the projector-sum lemma.

    With ``orthogonal=True`` the projectors split one orthonormal basis, so
    they are mutually orthogonal.
    """
    if not 1 <= dim <= MAX_LEMMA_DIM or not 1 <= m <= MAX_LEMMA_M:
        raise ValueError(f"need dim <= {MAX_LEMMA_DIM} and 1 <= m <= {MAX_LEMMA_M}")
    violations = low = high = degenerate = 0
    max_excess = -math.inf
    worst: dict = {}
    for trial in range(trials):
        count = 1 + trial % m
        if orthogonal:
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            q, _ = np.linalg.qr(g)
            cuts = np.sort(rng.choice(np.arange(dim + 1), size=count - 1, replace=True)) if count > 1 else []
            edges = [0, *cuts, dim]
            projs = [q[:, lo:hi] @ q[:, lo:hi].conj().T for lo, hi in zip(edges[:-1], edges[1:])]
        else:
            projs = [random_projector(dim, int(rng.integers(0, dim + 1)), rng) for _ in range(count)]
        degenerate += sum(1 for P in projs if np.trace(P).real < 0.5 or np.trace(P).real > dim - 0.5)
        psi = random_unit(dim, rng)
        lhs, rhs, lo_, hi_ = lemma_sides(projs, psi)
        low += lo_
        high += hi_
        excess = lhs - rhs
        if excess > max_excess:
            max_excess = excess
            worst = {"trial": trial, "m": count, "lhs": lhs, "rhs": rhs}
        if excess > LEMMA_TOL:
            violations += 1
    return LemmaReport(dim, m, trials, violations, low, high, degenerate, float(max_excess), worst)


# ---------------------------------------------------------------------------
# soundness curve
# ---------------------------------------------------------------------------


@dataclass
class CurveRow:
    k: int
    reference: float
    rates: dict
    stderrs: dict
    max_rate: float
    max_strategy: str
    ok: bool


def soundness_curve(H: ZXHamiltonian | None, ks, strategies, trials: int, seed: int = 0, lam: int = 8,
                    r: int = 64, mode: str = "interactive", backend: str = "mock",
                    width: int = DEFAULT_CTQ_WIDTH) -> list[CurveRow]:
    """Per-k acceptance rates of classical strategies next to the ``2^-k`` reference.

    ``ok`` means the largest rate stays within three standard errors of the
    reference or below it.
    """
    rows = []
    for k in ks:
        if not 1 <= k <= MAX_CURVE_K:
            raise ValueError(f"need 1 <= k <= {MAX_CURVE_K}")
        ref = 2.0 ** -k
        rates, errs = {}, {}
        for name in strategies:
            params = {"lam": lam, "r": r, "k": k, "backend": backend, "width": width}
            rep = estimate(mode, H, params, name, trials, seed + k, bound=ref)
            rates[name], errs[name] = rep.rate, rep.stderr
        best = max(rates, key=rates.get)
        ok = all(rates[s] <= ref + 3 * max(errs[s], 1.0 / trials) for s in rates)
        rows.append(CurveRow(k, ref, rates, errs, rates[best], best, ok))
    return rows


def frustrated_triangle(gap: float = 0.4) -> ZXHamiltonian:
    """Antiferromagnetic XX+ZZ triangle as a no-instance: ``b`` is the ground energy."""
    H = normalize({(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0}, n=3, a=-1.0, b=1.0)
    e0 = min_energy(H)[0]
    return with_thresholds(H, e0 - gap, e0)


def xxzz_pair(delta: float = 0.05, gap: float = 0.4) -> ZXHamiltonian:
    """``(XX+ZZ)/2`` on two qubits as a yes-instance with ``a = -1 + delta``."""
    return normalize({(0, 1): 1.0}, n=2, a=-1.0 + delta, b=-1.0 + delta + gap)


__all__ = [
    "ClassicalStrategy", "TestOnly", "GuessChallenge", "HalfSplit", "RandomNoise", "make_strategy",
    "EstimateReport", "estimate", "hoeffding_bound", "repetitions_for", "promise_gap", "modified_mf_accept",
    "hoeffding_grid", "lemma3_check", "soundness_curve", "frustrated_triangle", "xxzz_pair",
]
