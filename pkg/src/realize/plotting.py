"""Figures for the ``--plot`` option of the command line tool."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .smt import QueryKind  # noqa: E402

KIND_COLORS = {
    QueryKind.INITIAL_SAT: "#7f7f7f",
    QueryKind.BASE_CHECK_PRIME: "#1f77b4",
    QueryKind.EXTEND_CHECK: "#ff7f0e",
    QueryKind.EXACT_BASE_CHECK: "#2ca02c",
}


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_queries(verdict, path: str) -> str:
    """One bar per solver query, in execution order, labelled with its answer."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(verdict.records) + 2), 3.2))
    xs = range(len(verdict.records))
    ys = [max(r.wall_time_ms, 1) for r in verdict.records]
    ax.bar(xs, ys, color=[KIND_COLORS[r.kind] for r in verdict.records])
    for x, y, r in zip(xs, ys, verdict.records):
        ax.text(x, y, r.status.value, ha="center", va="bottom", fontsize=7)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"n={r.index}" for r in verdict.records], rotation=45, fontsize=7)
    ax.set_ylabel("wall time (ms)")
    ax.set_title(f"{verdict.contract}: {verdict.kind.value}", fontsize=10)
    used = [k for k in KIND_COLORS if any(r.kind is k for r in verdict.records)]
    handles = [plt.Rectangle((0, 0), 1, 1, color=KIND_COLORS[k]) for k in used]
    ax.set_ylim(0, 1.45 * max(ys, default=1))
    ax.legend(handles, [k.value for k in used], fontsize=7, loc="upper left", ncol=2)
    return _finish(fig, path)


def plot_fixpoint(sizes: list[int], name: str, path: str) -> str:
    """Size of the candidate viable set at each fixpoint iteration."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(range(len(sizes)), sizes, marker="o")
    ax.set_xlabel("iteration")
    ax.set_ylabel("|candidate viable states|")
    ax.set_ylim(bottom=0)
    ax.set_xticks(range(len(sizes)))
    ax.set_title(f"{name}: viability fixpoint", fontsize=10)
    return _finish(fig, path)
