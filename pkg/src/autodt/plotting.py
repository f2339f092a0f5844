"""Matplotlib renderings: critical-difference diagrams and evolution traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Fixed metadata keeps PNG bytes stable across runs.
_PNG_META = {"Software": None}


def cd_figure(methods, avg_ranks, cd: float, cliques, title: str | None = None):
    """Average-rank axis with a CD bar; methods in a clique are joined by a thick line."""
    k = len(methods)
    avg_ranks = np.asarray(avg_ranks, dtype=float)
    order = list(np.argsort(avg_ranks, kind="stable"))
    half = (k + 1) // 2
    right, left = order[:half], order[half:][::-1]  # outermost label = most extreme rank
    top = -0.25 - 0.12 * len(cliques)
    n_rows = max(len(right), len(left))
    fig, ax = plt.subplots(figsize=(6.4, 1.3 + 0.3 * n_rows))
    ax.set_xlim(k + 0.1, 0.9)  # rank 1 on the right
    ax.set_ylim(top - 0.4 * n_rows - 0.1, 2.0)
    ax.axis("off")
    ax.hlines(0, 1, k, color="k", lw=1)
    for r in range(1, k + 1):
        ax.vlines(r, 0, 0.15, color="k", lw=1)
        ax.text(r, 0.25, str(r), ha="center", va="bottom", fontsize=8)
    ax.hlines(1.3, 1, 1 + cd, color="k", lw=1.5)
    ax.vlines([1, 1 + cd], 1.2, 1.4, color="k", lw=1)
    ax.text(1 + cd / 2, 1.45, f"CD = {cd:.3f}", ha="center", va="bottom", fontsize=8)
    for side, members in (("right", right), ("left", left)):
        for row, idx in enumerate(members):
            r = avg_ranks[idx]
            y = top - 0.4 * row
            x_text = 0.95 if side == "right" else k + 0.05
            ax.plot([r, r, x_text], [0, y, y], color="0.3", lw=0.8)
            ax.text(x_text, y, f"{methods[idx]} ({r:.2f})", fontsize=8, va="center",
                    ha="left" if side == "right" else "right")
    for g, members in enumerate(cliques):
        lo, hi = min(avg_ranks[list(members)]), max(avg_ranks[list(members)])
        y = -0.12 - 0.12 * g
        ax.hlines(y, lo - 0.05, hi + 0.05, color="k", lw=3)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return fig


def save_cd_diagram(report, path, title: str | None = None) -> None:
    fig = cd_figure(report.methods, report.avg_ranks, report.cd, report.cliques, title)
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def save_trace_plot(trace, path, title: str | None = None) -> None:
    """Best and mean fitness per generation from an evolution trace."""
    gens = [t.generation for t in trace]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(gens, [t.best_f for t in trace], label="best", marker="o", ms=3)
    ax.plot(gens, [t.mean_f for t in trace], label="mean", ls="--")
    ax.set_xlabel("generation")
    ax.set_ylabel("weighted F-measure")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
