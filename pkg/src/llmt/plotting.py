"""Figures written next to the CSV/Markdown reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import DiffTable  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "llmt",
}

# no timestamp or version in the file, so identical inputs give identical bytes
_PNG_META = {"Software": None}


def _save(fig, path: Union[str, Path]) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def plot_em_deltas(diff: DiffTable, path: Union[str, Path]) -> None:
    """Bars of per-language EM change against the baseline run, one series per run."""
    runs = list(diff.deltas)
    langs = diff.languages
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(langs) * max(1, len(runs))), 3.0))
        width = 0.8 / max(1, len(runs))
        for j, name in enumerate(runs):
            xs = [i + (j - (len(runs) - 1) / 2) * width for i in range(len(langs))]
            ys = [diff.deltas[name][l] for l in langs]
            colors = ["#3b7dd8" if y >= 0 else "#d8553b" for y in ys] if len(runs) == 1 else None
            ax.bar(xs, ys, width=width, label=name, color=colors)
        ax.axhline(0, color="black", linewidth=0.6)
        ax.set_xticks(range(len(langs)))
        ax.set_xticklabels(langs)
        ax.set_ylabel(f"EM difference vs {diff.baseline}")
        if len(runs) > 1:
            ax.legend(frameon=False)
        _save(fig, path)


def plot_error_distribution(records: Sequence[dict], path: Union[str, Path]) -> None:
    """Horizontal bars of error-category percentages."""
    ordered = sorted(records, key=lambda r: r["percent"])
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 0.45 * len(ordered) + 0.8))
        bars = ax.barh([r["category"] for r in ordered], [r["percent"] for r in ordered],
                       color="#5a8f5a")
        for bar, r in zip(bars, ordered):
            ax.text(bar.get_width() + 0.5, bar.get_y() + bar.get_height() / 2,
                    f"{r['percent']:.1f}%", va="center", fontsize=8)
        ax.set_xlabel("share of errors (%)")
        top = max((r["percent"] for r in ordered), default=0.0)
        ax.set_xlim(0, min(100.0, top + 12))
        _save(fig, path)
