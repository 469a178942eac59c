"""Figures written next to the CLI's delimited reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .gridsearch import GridSearchResult  # noqa: E402
from .regression import CVReport  # noqa: E402

STATE_COLORS = {
    "feasible": "#2b8a3e",
    "infeasible": "#c92a2a",
    "pruned": "#f59f00",
    "timeout": "#868e96",
    "error": "#5f3dc4",
    "untested": "#ffffff",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_cv_scores(report: CVReport, path: str | Path) -> Path:
    """Test R^2 of every trial, grouped by repetition, with the median marked."""
    scores = np.array(report.scores, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    reps = np.arange(len(scores)) // report.folds
    ax.scatter(reps + 1, scores, s=14, color="#1c7ed6", alpha=0.8)
    ax.axhline(report.median, color="#c92a2a", lw=1, label=f"median {report.median:.3f}")
    ax.set_xlabel("repetition")
    ax.set_ylabel("test $R^2$")
    ax.set_xticks(range(1, report.repeats + 1))
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_parity(y_true: Sequence[float], y_pred: Sequence[float], path: str | Path) -> Path:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    fig, ax = plt.subplots(figsize=(3.6, 3.6))
    lo = float(min(y_true.min(), y_pred.min()))
    hi = float(max(y_true.max(), y_pred.max()))
    ax.plot([lo, hi], [lo, hi], color="#adb5bd", lw=1)
    ax.scatter(y_true, y_pred, s=12, color="#1c7ed6")
    ax.set_xlabel("observed")
    ax.set_ylabel("predicted")
    fig.tight_layout()
    return _save(fig, path)


def plot_grid_status(result: GridSearchResult, path: str | Path) -> Path | None:
    """Status map of the searched grids (one or two projection axes only)."""
    dim = result.geometry.dim
    if dim > 2:
        return None
    fig, ax = plt.subplots(figsize=(4.2, 4.2 if dim == 2 else 1.6))
    for z in result.order:
        rec = result.records[z]
        x, y = (z[0], z[1]) if dim == 2 else (z[0], 0)
        ax.add_patch(plt.Rectangle((x - 0.5, y - 0.5), 1, 1, facecolor=STATE_COLORS[rec.state], edgecolor="black", lw=0.5))
    r = result.geometry.radius
    ax.set_xlim(-r[0] - 0.5, r[0] + 0.5)
    ax.set_ylim((-r[1] - 0.5, r[1] + 0.5) if dim == 2 else (-0.5, 0.5))
    ax.set_aspect("equal")
    ax.set_xlabel("z1")
    if dim == 2:
        ax.set_ylabel("z2")
    else:
        ax.set_yticks([])
    handles = [plt.Rectangle((0, 0), 1, 1, facecolor=c, edgecolor="black", lw=0.5)
               for s, c in STATE_COLORS.items() if result.counts()[s]]
    labels = [s for s in STATE_COLORS if result.counts()[s]]
    ax.legend(handles, labels, fontsize=7, loc="upper left", bbox_to_anchor=(1.02, 1.0))
    fig.tight_layout()
    return _save(fig, path)
