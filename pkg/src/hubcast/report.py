"""Figure rendering for sweep and experiment reports.

CSV stays the machine-readable contract; these helpers draw the companion
pictures next to it.  All figures go through the Agg backend so rendering
works headless.
"""

from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _series_key(row) -> str:
    strat = row.get("strategy", "-")
    label = row["engine"] if strat in ("-", None) else f"{row['engine']}/{strat}"
    return f"{label} n1={row['n1']} n2={row['n2']}"


def render_sweep_figures(rows: list[dict], out_dir: str,
                         stem: str = "sweep") -> list[str]:
    """Success-rate and overhead figures for a sweep; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    by_series = defaultdict(list)
    for row in rows:
        by_series[_series_key(row)].append(row)
    for series in by_series.values():
        series.sort(key=lambda r: r["epsilon"])

    paths = []
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, series in sorted(by_series.items()):
        eps = [r["epsilon"] for r in series]
        rate = [r["success_rate"] for r in series]
        lo = [r["success_rate"] - r["wilson_low"] for r in series]
        hi = [r["wilson_high"] - r["success_rate"] for r in series]
        ax.errorbar(eps, rate, yerr=[lo, hi], marker="o", capsize=3, label=name)
    ax.set_xlabel("crossover probability")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}_success.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, series in sorted(by_series.items()):
        eps = [r["epsilon"] for r in series]
        over = [r["overhead"] for r in series]
        ax.plot(eps, over, marker="s", label=f"{name} (measured)")
        pred = series[0]["predicted_overhead"]
        ax.axhline(pred, linestyle="--", alpha=0.4)
    ax.set_xlabel("crossover probability")
    ax.set_ylabel("rounds / RC")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}_overhead.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths


def render_experiment_figures(report, out_dir: str,
                              stem: str = "experiment") -> list[str]:
    """Per-trial rewind and error picture for a single experiment."""
    os.makedirs(out_dir, exist_ok=True)
    trials = report.trials
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.2, 3.8))
    ax1.bar(range(len(trials)), [t.bk_total for t in trials],
            color=["tab:green" if t.success else "tab:red" for t in trials])
    ax1.set_xlabel("trial")
    ax1.set_ylabel("rewind symbols sent")
    ax1.set_title("rewinds per trial (red = failed)")
    ax2.scatter([t.tree_errors for t in trials], [t.bk_total for t in trials],
                s=14, alpha=0.6)
    ax2.set_xlabel("tree decoding errors")
    ax2.set_ylabel("rewind symbols")
    ax2.set_title("errors vs rewinds")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}_trials.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
