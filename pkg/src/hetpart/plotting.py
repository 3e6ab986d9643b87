"""Figures written next to the CSV/JSON outputs of the CLI."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .simulator.timeline import PHASES, SortTimeline  # noqa: E402

PHASE_COLORS = {
    "local_sort": "#4c72b0",
    "pivot_exchange": "#dd8452",
    "partition_split": "#55a868",
    "redistribution": "#c44e52",
    "final_merge": "#8172b3",
}


def figure_path(output: str | Path, suffix: str = "") -> Path:
    out = Path(output)
    return out.with_name(out.stem + suffix + ".png")


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_partition(speeds: Sequence[float], sizes: Sequence[int], times: Sequence[float],
                   path, title: str = "") -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    nodes = np.arange(len(sizes))
    ax1.bar(nodes, sizes, color="#4c72b0")
    ax1.set_xlabel("node")
    ax1.set_ylabel("chunk size")
    ax2.bar(nodes, times, color="#55a868")
    ax2.axhline(max(times), color="k", lw=0.8, ls="--", label="makespan")
    ax2.set_xlabel("node")
    ax2.set_ylabel("projected time")
    ax2.legend(loc="lower right", fontsize=8)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_compare(rows: Sequence[dict], path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    names = [r["scheme"] for r in rows]
    spans = [r["makespan"] for r in rows]
    bars = ax.bar(names, spans, color="#4c72b0")
    lo = min(spans)
    ax.set_ylim(lo * 0.98, max(spans) * 1.01)
    for b, r in zip(bars, rows):
        ax.annotate(f"{r['improvement_pct']:+.2f}%", (b.get_x() + b.get_width() / 2, b.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("projected makespan")
    return _save(fig, path)


def _stack(ax, tl: SortTimeline, title: str):
    nodes = np.arange(len(tl.per_node))
    bottom = np.zeros(len(nodes))
    for ph in PHASES:
        vals = np.array([getattr(n, ph) for n in tl.per_node])
        ax.bar(nodes, vals, bottom=bottom, color=PHASE_COLORS[ph], label=ph)
        bottom += vals
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("node")


def plot_timelines(timelines: Sequence[SortTimeline], labels: Sequence[str], path,
                   ratios: Sequence[float] | None = None) -> Path:
    ncols = len(timelines) + (1 if ratios else 0)
    fig, axes = plt.subplots(1, ncols, figsize=(4 * ncols, 3.6), squeeze=False)
    axes = axes[0]
    for ax, tl, label in zip(axes, timelines, labels):
        _stack(ax, tl, f"{label} (makespan {tl.makespan:.3g})")
    axes[0].set_ylabel("charged time [s]")
    axes[0].legend(fontsize=7, loc="lower left")
    if ratios:
        ax = axes[-1]
        ax.hist(ratios, bins=min(20, max(5, len(ratios) // 2)), color="#8172b3")
        ax.axvline(1.0, color="k", lw=0.8, ls="--")
        ax.set_xlabel("makespan ratio (scheme / proportional)")
        ax.set_title(f"median {np.median(ratios):.4f}", fontsize=10)
    return _save(fig, path)


def plot_learning(model_points: Sequence[tuple], makespans: Sequence[float], path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    if model_points:
        xs = [p[0] for p in model_points]
        ys = [p[1] for p in model_points]
        ax1.plot(xs, ys, "o-", ms=3)
    ax1.set_xlabel("size")
    ax1.set_ylabel("learned cost")
    if makespans:
        ax2.plot(np.arange(1, len(makespans) + 1), makespans, "s-", ms=4)
    ax2.set_xlabel("batch")
    ax2.set_ylabel("makespan")
    return _save(fig, path)
