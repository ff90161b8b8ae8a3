"""Figures for the report commands: feature-matrix heatmap and lint summary.

Rendering uses the Agg backend so it works without a display.
"""
from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

# cell categories for the heatmap
_CATEGORY = {"yes": 2, "no": 0}
_COLOURS = ["#d9534f", "#f0ad4e", "#5cb85c"]


def _cell_category(value: str) -> int:
    return _CATEGORY.get(value, 1)


def feature_heatmap(store, path, dialects=None) -> Path:
    """Write the feature matrix as a coloured grid, one column per dialect."""
    dialects = list(dialects or store.names)
    keys = store.keys
    grid = [[_cell_category(str(store.feature(d, k))) for d in dialects] for k in keys]
    fig, ax = plt.subplots(figsize=(1.6 * len(dialects) + 3, 0.32 * len(keys) + 1.2))
    ax.imshow(grid, cmap=ListedColormap(_COLOURS), vmin=0, vmax=2, aspect="auto")
    ax.set_xticks(range(len(dialects)))
    ax.set_xticklabels(dialects)
    ax.xaxis.tick_top()
    ax.set_yticks(range(len(keys)))
    ax.set_yticklabels([store.decls[k].label for k in keys], fontsize=8)
    for i, k in enumerate(keys):
        for j, d in enumerate(dialects):
            v = store.feature(d, k)
            text = str(v) + ("*" if v.note else "")
            ax.text(j, i, text, ha="center", va="center", fontsize=7)
    fig.tight_layout(rect=(0, 0.04, 1, 1))
    fig.text(0.01, 0.01, "* cell carries a qualifier", fontsize=7)
    out = Path(path)
    fig.savefig(out, dpi=100)
    plt.close(fig)
    return out


def findings_chart(findings, path) -> Path:
    """Write a stacked bar chart of finding counts per rule, split by severity."""
    counts = Counter((f.rule_id, f.severity) for f in findings)
    rules = sorted({r for r, _ in counts})
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(rules) + 2), 3.5))
    bottom = [0] * len(rules)
    colours = {"error": "#d9534f", "warning": "#f0ad4e", "info": "#5bc0de"}
    for sev in ("error", "warning", "info"):
        heights = [counts.get((r, sev), 0) for r in rules]
        if any(heights):
            ax.bar(range(len(rules)), heights, bottom=bottom, color=colours[sev], label=sev)
            bottom = [b + h for b, h in zip(bottom, heights)]
    ax.set_xticks(range(len(rules)))
    ax.set_xticklabels(rules, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("findings")
    if rules:
        ax.legend(fontsize=7)
    else:
        ax.text(0.5, 0.5, "no findings", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=100)
    plt.close(fig)
    return out
