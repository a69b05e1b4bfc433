"""Golden Fiat-Shamir transcripts: generation and loading.

Run ``python3 tests/golden.py`` to rewrite ``tests/data/fs_golden.json``.
Setups are not stored; each entry's seed regenerates its setup.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from cvqc.analysis import make_strategy, xxzz_pair
from cvqc.fiatshamir import RandomOracle, fs_prove
from cvqc.protocol import setup

PATH = Path(__file__).parent / "data" / "fs_golden.json"
LAM, R, K = 8, 8, 3
STRATEGIES = ("honest", "test-only", "guess-challenge", "half-split", "random-noise")


def session(seed: int, strategy: str):
    rng = np.random.default_rng(seed)
    setups = setup(LAM, 2, R, K, rng)
    tr = fs_prove(xxzz_pair(), setups, make_strategy(strategy), RandomOracle(), rng)
    return setups, tr


def regenerate_setup(seed: int):
    return setup(LAM, 2, R, K, np.random.default_rng(seed))


def generate(count: int = 100) -> list[dict]:
    out = []
    for seed in range(count):
        # honest sessions make up half the file so both verdicts are well represented
        strategy = "honest" if seed % 2 == 0 else STRATEGIES[1 + (seed // 2) % 4]
        _, tr = session(seed, strategy)
        out.append({"seed": seed, "strategy": strategy, "digest": tr.digest().hex(), "transcript": tr.to_json()})
    return out


def load() -> list[dict]:
    return json.loads(PATH.read_text())["sessions"]


if __name__ == "__main__":
    PATH.parent.mkdir(parents=True, exist_ok=True)
    data = {"lam": LAM, "r": R, "k": K, "instance": "xxzz_pair()", "sessions": generate()}
    PATH.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(data['sessions'])} sessions to {PATH}")
