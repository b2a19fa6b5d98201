"""Figure rendering for benchmark reports.

Figures are drawn with matplotlib and written as SVG next to the CSV data.
Rendering is deterministic: the SVG hash salt is pinned and creation dates
are stripped, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "bpsplan"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "straight": dict(color="#888888", ls="--", label="straight line"),
    "multistart_avg": dict(color="#1f77b4", ls="-", label="multi-start (average)"),
    "multistart_best": dict(color="#1f77b4", ls=":", label="multi-start (best)"),
    "network": dict(color="#d62728", ls="-", label="network warm start"),
}


def save_figure(fig, path):
    fig.savefig(path, metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def convergence_figure(budgets, phi: dict):
    """Feasibility rate versus optimizer iterations, one line per method."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in ("straight", "multistart_avg", "multistart_best", "network"):
        if key in phi:
            ax.plot(budgets, phi[key], **_STYLE[key])
    ax.set_xlabel("optimizer iterations")
    ax.set_ylabel(r"feasibility rate $\phi$")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlim(0, budgets[-1])
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=9)
    return fig


def multistart_histogram(per_task_fraction):
    """Distribution of the per-task feasible fraction of random restarts."""
    fig, ax = plt.subplots(figsize=(6, 3))
    bins = np.linspace(0.0, 1.0, 21)
    ax.hist(per_task_fraction, bins=bins, color="#1f77b4", edgecolor="white")
    ax.set_xlabel("fraction of feasible multi-starts per task")
    ax.set_ylabel("tasks")
    ax.grid(alpha=0.3, axis="y")
    return fig


def bps_size_figure(sizes, phis, baseline=None):
    """Feasibility after warm start as a function of the encoding size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, phis, "o-", color="#d62728", label="network warm start")
    if baseline is not None:
        ax.axhline(baseline, color="#888888", ls="--", label="straight line")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("basis point count")
    ax.set_ylabel(r"feasibility rate $\phi$")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=9)
    return fig


def loss_figure(histories: dict):
    """Training loss per epoch for one or more training runs."""
    fig, ax = plt.subplots(figsize=(6, 3))
    for name, hist in histories.items():
        ax.plot(np.arange(1, len(hist) + 1), hist, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("weighted MSE")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return fig


def render_benchmark(outdir, report):
    """Standard figure set for a benchmark report directory."""
    from pathlib import Path

    outdir = Path(outdir)
    save_figure(convergence_figure(report.budgets, report.phi),
                outdir / "convergence.svg")
    if report.per_task_fraction.size:
        save_figure(multistart_histogram(report.per_task_fraction),
                    outdir / "multistart_histogram.svg")
