"""SVG chart rendering for convergence curves and sweep summaries.

Charts are drawn straight onto matplotlib Figure objects (no pyplot, no GUI
backend). The SVG hash salt is pinned and the Date metadata stripped so the
same inputs render byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.rcParams["svg.hashsalt"] = "fedcell"

from matplotlib.figure import Figure  # noqa: E402

from .fed import RoundRecord  # noqa: E402
from .metrics import LABEL_NAMES  # noqa: E402


def _save(fig: Figure, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")


def convergence_chart(history: list[RoundRecord], centralized_exact_match: float, path) -> None:
    """Federated accuracy per round with the centralized result as reference."""
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.subplots()
    ax.plot(
        [r.round_idx for r in history],
        [r.exact_match for r in history],
        marker="o",
        markersize=3,
        linewidth=1.2,
        color="tab:blue",
        label="federated (per round)",
    )
    ax.axhline(
        centralized_exact_match,
        color="tab:red",
        linestyle="--",
        linewidth=1.2,
        label="centralized (final)",
    )
    ax.set_xlabel("communication round")
    ax.set_ylabel("exact-match accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    _save(fig, path)


def accuracy_bars(rows: list[dict], path) -> None:
    """Grouped exact-match bars per scenario, one bar per training mode."""
    scenarios = sorted({r["scenario"] for r in rows})
    modes = ("centralized", "federated")
    by_key = {(r["scenario"], r["mode"]): r["exact_match"] for r in rows}
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.subplots()
    width = 0.38
    for k, mode in enumerate(modes):
        xs = [i + (k - 0.5) * width for i in range(len(scenarios))]
        ax.bar(xs, [by_key[(s, mode)] for s in scenarios], width=width, label=mode)
    ax.set_xticks(range(len(scenarios)))
    ax.set_xticklabels(scenarios)
    ax.set_ylabel("exact-match accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(loc="lower right")
    _save(fig, path)


def precision_bars(rows: list[dict], path, mode: str = "federated") -> None:
    """Per-label precision bars per scenario for one training mode.

    Undefined precisions (no positive predictions) are drawn as gaps.
    """
    scenarios = sorted({r["scenario"] for r in rows})
    by_scenario = {r["scenario"]: r["precision"] for r in rows if r["mode"] == mode}
    fig = Figure(figsize=(9.0, 4.5))
    ax = fig.subplots()
    width = 0.8 / len(LABEL_NAMES)
    for j, label in enumerate(LABEL_NAMES):
        xs = [i + (j - (len(LABEL_NAMES) - 1) / 2.0) * width for i in range(len(scenarios))]
        heights = [
            by_scenario[s][label] if by_scenario[s][label] is not None else float("nan")
            for s in scenarios
        ]
        ax.bar(xs, heights, width=width, label=label)
    ax.set_xticks(range(len(scenarios)))
    ax.set_xticklabels(scenarios)
    ax.set_ylabel(f"per-label precision ({mode})")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(loc="lower right", ncols=4)
    _save(fig, path)
