"""Figures for the report commands (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_estimate(report, path) -> None:
    """Bar with a 3-sigma error bar next to the comparison bound."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.bar([0], [report.rate], yerr=[3 * report.stderr], capsize=6, color="tab:blue", label="empirical")
    if report.bound is not None:
        ax.axhline(report.bound, color="tab:red", ls="--", label=f"bound {report.bound:.4g}")
    ax.set_xticks([0], [report.strategy])
    ax.set_ylabel("acceptance rate")
    ax.set_ylim(0, max(1.0, report.rate + 4 * report.stderr))
    ax.set_title(f"{report.mode}, {report.trials} trials")
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def plot_soundness_curve(rows, path) -> None:
    ks = np.array([row.k for row in rows])
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.semilogy(ks, [row.reference for row in rows], "k--", label="2^-k")
    names = list(rows[0].rates) if rows else []
    for name in names:
        rates = np.array([row.rates[name] for row in rows])
        errs = np.array([row.stderrs[name] for row in rows])
        shown = rates > 0
        if shown.any():
            ax.errorbar(ks[shown], rates[shown], yerr=3 * errs[shown], marker="o", capsize=3, label=name)
    ax.set_xticks(ks)
    ax.set_xlabel("k (parallel groups)")
    ax.set_ylabel("acceptance rate")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_lemma(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    labels = ["violations", "clamped < 0", "clamped > 2", "degenerate"]
    values = [report.violations, report.clamped_low, report.clamped_high, report.degenerate]
    ax.bar(labels, values, color=["tab:red", "tab:gray", "tab:gray", "tab:gray"])
    ax.set_title(f"dim={report.dim}, m<={report.m_max}, {report.trials} instances; "
                 f"max excess {report.max_excess:.2e}", fontsize=9)
    ax.set_ylabel("count")
    _save(fig, path)


def plot_hoeffding_grid(points, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for g in sorted({p.g for p in points}):
        sel = [p for p in points if p.g == g]
        rs = [p.r for p in sel]
        line, = ax.semilogy(rs, [max(p.completeness_error, p.soundness_error, 1e-5) for p in sel], "o-",
                            label=f"g={g:g} empirical")
        ax.semilogy(rs, [min(p.bound, 2.0) for p in sel], "--", color=line.get_color())
    ax.set_xlabel("r (copies)")
    ax.set_ylabel("error (dashed: bound)")
    ax.legend(fontsize=7)
    _save(fig, path)
