"""Command-line entry point: ``cvqc <command> [options]``.

Exit codes: 0 success or accept, 1 reject, 2 usage or input error,
3 a bound check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (STRATEGY_NAMES, estimate, frustrated_triangle, hoeffding_bound, hoeffding_grid,
                       lemma3_check, make_strategy, promise_gap, soundness_curve, xxzz_pair)
from .fiatshamir import RandomOracle, fs_check, fs_prove
from .hamiltonian import InvalidInstance, ZXHamiltonian, min_energy, random_instance, spectrum
from .protocol import (SCHEMA_VERSION, Transcript, replay_decision, run_ctq, run_interactive, setup, setup_ctq,
                       setup_from_json, setup_to_json)

EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE, EXIT_BOUND = 0, 1, 2, 3
PRESETS = ("xxzz", "triangle", "random")


class UsageError(Exception):
    pass


def version_string() -> str:
    """Package version plus ``git describe`` of the source tree when available."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _envelope(args, **payload) -> dict:
    return {"schema_version": SCHEMA_VERSION, "version": version_string(), "config": _config(args), **payload}


def _write_json(path, data) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, bytes):
        return obj.hex()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _instance(args) -> ZXHamiltonian:
    if args.instance:
        data = _read_json(args.instance)
        try:
            return ZXHamiltonian.from_json(data.get("instance", data))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad instance file: {exc}") from None
    return xxzz_pair()


def _table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _write_report(out: str, headers, rows, payload: dict, plot) -> None:
    """``out.json``, ``out.csv``, ``out.txt`` and ``out.png`` side by side; the table also goes to stdout."""
    base = Path(out)
    base.parent.mkdir(parents=True, exist_ok=True)
    _write_json(base.with_suffix(".json"), payload)
    with open(base.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)
    table = _table(headers, rows)
    base.with_suffix(".txt").write_text(table + "\n")
    plot(base.with_suffix(".png"))
    print(table)
    print(f"wrote {base.with_suffix('.json')}, .csv, .txt, .png")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen_instance(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.preset == "xxzz":
        H = xxzz_pair(gap=args.gap)
    elif args.preset == "triangle":
        H = frustrated_triangle(gap=args.gap)
    else:
        H = random_instance(args.n, rng, gap=args.gap, yes=not args.no)
    _write_json(args.out, _envelope(args, instance=H.to_json()))
    return EXIT_ACCEPT


def cmd_ground_energy(args) -> int:
    H = _instance(args)
    e0, _ = min_energy(H)
    spec = spectrum(H)
    _write_json(args.out, _envelope(args, n=H.n, ground_energy=e0, spectrum=spec[: min(8, spec.size)].tolist(),
                                    a=H.a, b=H.b, yes_instance=bool(e0 <= H.a)))
    return EXIT_ACCEPT


def _setups(args, H, rng):
    if getattr(args, "setup", None):
        vs, ps = setup_from_json(_read_json(args.setup))
        if vs is None:
            raise UsageError("setup file has no verifier secrets")
        if vs.params.n != H.n:
            raise UsageError(f"setup is for n={vs.params.n}, instance has n={H.n}")
        return vs, ps
    return setup(args.lam, H.n, args.r, args.k, rng, args.funcfam)


def cmd_setup(args) -> int:
    n = _instance(args).n if args.instance else args.n
    rng = np.random.default_rng(args.seed)
    vs, _ = setup(args.lam, n, args.r, args.k, rng, args.funcfam)
    _write_json(args.out, _envelope(args, **setup_to_json(vs, include_secrets=True)))
    return EXIT_ACCEPT


def _session(args, H, vs, tr) -> dict:
    return _envelope(args, instance=H.to_json() if H is not None else None,
                     setup=setup_to_json(vs), transcript=tr.to_json())


def _finish(args, H, vs, tr) -> int:
    _write_json(args.out, _session(args, H, vs, tr))
    status = "accept" if tr.decision else "reject"
    print(f"{tr.mode}: {status}  digest={tr.digest().hex()}", file=sys.stderr)
    return EXIT_ACCEPT if tr.decision else EXIT_REJECT


def cmd_run(args) -> int:
    H = _instance(args)
    rng = np.random.default_rng(args.seed)
    vs, ps = _setups(args, H, rng)
    tr = run_interactive(H, (vs, ps), make_strategy(args.strategy), rng)
    return _finish(args, H, vs, tr)


def cmd_fs_run(args) -> int:
    H = _instance(args)
    rng = np.random.default_rng(args.seed)
    vs, ps = _setups(args, H, rng)
    tr = fs_prove(H, (vs, ps), make_strategy(args.strategy), RandomOracle(), rng)
    return _finish(args, H, vs, tr)


def cmd_ctq(args) -> int:
    rng = np.random.default_rng(args.seed)
    vs, ps = setup_ctq(args.lam, args.width, args.k, rng, args.funcfam)
    tr = run_ctq((vs, ps), make_strategy(args.strategy), rng)
    return _finish(args, None, vs, tr)


def _zk(args, simulated: bool) -> int:
    from . import zkp

    H = _instance(args)
    rng = np.random.default_rng(args.seed)
    fhe = zkp.FHE_BACKENDS[args.fhe]()
    nizk = zkp.NIZK_BACKENDS[args.nizk]()
    zs = zkp.setup_zk(args.lam, H.n, args.r, args.k, rng, fhe, nizk, args.funcfam)
    challenge = zkp.uniform_challenges(args.k, rng)
    if simulated:
        tr = zkp.simulate(H, zs, challenge, rng, fhe, nizk)
    else:
        tr = zkp.zk_prove(H, zs.st_P, zs.st_V.keys, challenge, rng, fhe, nizk)
    relation = zkp.verdict_prime(zkp.instance_of(H, zs.st_V, tr), tr.tau)
    accept = zkp.zk_verify(zs.st_V, H, tr, fhe, nizk)
    _write_json(args.out, _envelope(args, instance=H.to_json(), transcript=tr.to_json(), relation=relation,
                                    accept=accept))
    print(f"{tr.mode}: {'accept' if accept else 'reject'}  relation={relation}", file=sys.stderr)
    return EXIT_ACCEPT if accept else EXIT_REJECT


def cmd_zk_run(args) -> int:
    return _zk(args, simulated=False)


def cmd_zk_simulate(args) -> int:
    return _zk(args, simulated=True)


def cmd_replay(args) -> int:
    """Re-verify a stored session; a field-level diff is printed on any mismatch."""
    data = _read_json(args.transcript)
    try:
        tr = Transcript.from_json(data["transcript"])
        vs, _ = setup_from_json(_read_json(args.setup) if args.setup else data["setup"])
        H = None if data.get("instance") is None else ZXHamiltonian.from_json(data["instance"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad session file: {exc}") from None
    if vs is None:
        raise UsageError("session has no verifier secrets")
    stored = data["transcript"].get("field_digests", {})
    current = tr.field_digests()
    diff = [(name, stored.get(name, "-"), current[name]) for name in current if stored.get(name) != current[name]]
    digest_ok = tr.stored_digest == tr.digest()
    if diff or not digest_ok:
        rows = [(name, old[:16], new[:16]) for name, old, new in diff]
        if not digest_ok:
            rows.append(("digest", (tr.stored_digest or b"").hex()[:16], tr.digest().hex()[:16]))
        print(_table(("field", "stored", "recomputed"), rows))
        print("replay: transcript was modified", file=sys.stderr)
        return EXIT_REJECT
    if tr.mode == "fs":
        reason = fs_check(H, vs, tr, RandomOracle())
        decision = reason is None and replay_decision(H, vs, tr)
    else:
        reason, decision = None, replay_decision(H, vs, tr)
    agree = decision == bool(tr.decision)
    print(_table(("mode", "stored", "replayed", "agree", "note"),
                 [(tr.mode, tr.decision, decision, agree, reason or "")]))
    return EXIT_ACCEPT if decision and agree else EXIT_REJECT


def cmd_estimate(args) -> int:
    from .plotting import plot_estimate

    H = None if args.mode == "ctq" else (_instance(args) if args.instance else frustrated_triangle())
    if args.strategy == "honest" and args.mode != "ctq" and not args.instance:
        H = xxzz_pair()
    params = {"lam": args.lam, "r": args.r, "k": args.k, "backend": args.funcfam, "width": args.width}
    if args.strategy == "honest":
        g = promise_gap(H.a, H.b) if H is not None else 0.5
        bound, kind = max(0.0, 1.0 - args.k * hoeffding_bound(args.r, g)), "lower"
    else:
        bound, kind = 2.0 ** -args.k, "upper"
    rep = estimate(args.mode, H, params, args.strategy, args.trials, args.seed, bound=bound, bound_kind=kind)
    headers = ("mode", "strategy", "k", "trials", "successes", "rate", "stderr", "bound", "kind", "ok")
    rows = [(rep.mode, rep.strategy, args.k, rep.trials, rep.successes, rep.rate, rep.stderr, bound, kind,
             rep.verdict)]
    _write_report(args.out, headers, rows, _envelope(args, report=rep.to_json()), lambda p: plot_estimate(rep, p))
    return EXIT_ACCEPT if rep.verdict else EXIT_BOUND


def cmd_soundness_curve(args) -> int:
    from .plotting import plot_soundness_curve

    H = None if args.mode == "ctq" else (_instance(args) if args.instance else frustrated_triangle())
    strategies = [s for s in args.strategies.split(",") if s]
    for s in strategies:
        if s not in STRATEGY_NAMES or s == "honest":
            raise UsageError(f"soundness curves take classical strategies, got {s!r}")
    rows = soundness_curve(H, range(1, args.kmax + 1), strategies, args.trials, args.seed, args.lam, args.r,
                           args.mode, args.funcfam, args.width)
    headers = ["k", "2^-k"] + [f"rate[{s}]" for s in strategies] + ["max", "ok"]
    table = [[row.k, row.reference] + [row.rates[s] for s in strategies] + [row.max_rate, row.ok] for row in rows]
    _write_report(args.out, headers, table, _envelope(args, rows=[asdict(r) for r in rows]),
                  lambda p: plot_soundness_curve(rows, p))
    return EXIT_ACCEPT if all(r.ok for r in rows) else EXIT_BOUND


def cmd_lemma_check(args) -> int:
    from .plotting import plot_lemma

    rep = lemma3_check(args.dim, args.m, args.trials, np.random.default_rng(args.seed))
    headers = ("dim", "m_max", "trials", "violations", "clamped_low", "clamped_high", "degenerate", "max_excess")
    rows = [(rep.dim, rep.m_max, rep.trials, rep.violations, rep.clamped_low, rep.clamped_high, rep.degenerate,
             rep.max_excess)]
    _write_report(args.out, headers, rows, _envelope(args, report=rep.to_json()), lambda p: plot_lemma(rep, p))
    return EXIT_ACCEPT if rep.ok else EXIT_BOUND


def cmd_hoeffding_grid(args) -> int:
    from .plotting import plot_hoeffding_grid

    points = hoeffding_grid(trials=args.trials, seed=args.seed)
    headers = ("r", "g", "a", "b", "completeness_err", "soundness_err", "stderr", "bound", "ok")
    rows = [(p.r, p.g, p.a, p.b, p.completeness_error, p.soundness_error, p.stderr, p.bound, p.ok) for p in points]
    _write_report(args.out, headers, rows, _envelope(args, points=[asdict(p) for p in points]),
                  lambda p: plot_hoeffding_grid(points, p))
    return EXIT_ACCEPT if all(p.ok for p in points) else EXIT_BOUND


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(**defaults) -> argparse.ArgumentParser:
    # a fresh parent per subcommand: argparse shares parent actions, so defaults must not leak
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--instance", help="instance JSON (as written by gen-instance)")
    common.add_argument("--lambda", dest="lam", type=int, default=8, help="security parameter (mock: domain bits)")
    common.add_argument("--n", type=int, default=2, help="qubits per copy")
    common.add_argument("--width", type=int, default=8, help="claw-free qubits per ctq group")
    common.add_argument("--r", type=int, default=64, help="copies per group")
    common.add_argument("--k", type=int, default=5, help="parallel groups")
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--strategy", default="honest", choices=STRATEGY_NAMES)
    common.add_argument("--funcfam", default="mock", choices=("mock", "toylwe"))
    common.add_argument("--fhe", default="transparent", choices=("transparent",))
    common.add_argument("--nizk", default="toy", choices=("toy",))
    common.add_argument("--out", default=None, help="output path (JSON) or report prefix")
    common.set_defaults(**defaults)
    return common


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvqc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=version_string())
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, **defaults):
        sp = sub.add_parser(name, parents=[_common(**defaults)], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("gen-instance", cmd_gen_instance, "write a ZX instance")
    sp.add_argument("--preset", choices=PRESETS, default="xxzz")
    sp.add_argument("--gap", type=float, default=0.4)
    sp.add_argument("--no", action="store_true", help="random preset: make a no-instance")
    add("ground-energy", cmd_ground_energy, "exact ground energy and low spectrum")
    add("setup", cmd_setup, "instance-independent setup with verifier secrets")
    for name, func, help_ in (("run", cmd_run, "interactive session"), ("fs-run", cmd_fs_run, "Fiat-Shamir session")):
        sp = add(name, func, help_)
        sp.add_argument("--setup", help="setup JSON written by the setup command")
    add("zk-run", cmd_zk_run, "zero-knowledge session with the honest prover")
    add("zk-simulate", cmd_zk_simulate, "simulated zero-knowledge transcript")
    add("ctq", cmd_ctq, "test-of-quantumness session")
    sp = add("replay", cmd_replay, "re-verify a stored session file")
    sp.add_argument("transcript", help="session JSON written by run, fs-run or ctq")
    sp.add_argument("--setup", help="override the embedded setup")
    sp = add("estimate", cmd_estimate, "Monte Carlo acceptance estimate", out="cvqc-out/estimate", r=128)
    sp.add_argument("--mode", choices=("interactive", "fs", "ctq"), default="interactive")
    sp = add("soundness-curve", cmd_soundness_curve, "classical acceptance versus 2^-k", out="cvqc-out/soundness",
             r=128, trials=2000)
    sp.add_argument("--mode", choices=("interactive", "fs", "ctq"), default="interactive")
    sp.add_argument("--kmax", type=int, default=6)
    sp.add_argument("--strategies", default="test-only,guess-challenge,half-split,random-noise")
    sp = add("lemma-check", cmd_lemma_check, "random projector tuples against the projector-sum bound",
             out="cvqc-out/lemma", trials=10000)
    sp.add_argument("--dim", type=int, default=8)
    sp.add_argument("--m", type=int, default=4)
    add("hoeffding-grid", cmd_hoeffding_grid, "modified MF errors against the Hoeffding bound",
        out="cvqc-out/hoeffding", trials=4000)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidInstance, ValueError, PermissionError) as exc:
        print(f"cvqc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
