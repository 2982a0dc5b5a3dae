"""Report figures rendered to files, next to the delimited exports.

Every function takes the plain records the corresponding report writes to
disk, draws one figure and returns the path it saved. Rendering is headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import UNCLASSIFIED, EvalReport
from .model import CLASS_ORDER

_DECISION_STYLE = {
    "relevance": ("tab:blue", "kept by threshold"),
    "oat": ("tab:green", "recovered one-at-a-time"),
    "discarded": ("tab:red", "discarded"),
}


def plot_relevance_selection(
    records: Sequence[dict], path, t_r: Optional[float] = None
) -> Path:
    """Occurrences vs relevance per event code, colored by selection outcome."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    for decision, (color, label) in _DECISION_STYLE.items():
        xs = [r["total"] for r in records if r["decision"] == decision]
        ys = [r["relevance"] for r in records if r["decision"] == decision]
        if xs:
            ax.scatter(xs, ys, s=14, alpha=0.7, color=color, label=label)
    if t_r is not None:
        ax.axhline(t_r, color="black", linestyle="--", linewidth=1,
                   label=f"threshold {t_r:.2f}")
    ax.set_xscale("log")
    ax.set_xlabel("incident traces containing the code")
    ax.set_ylabel("relevance")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("Event code selection")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_threshold_curve(records: Sequence[dict], path,
                         chosen: Optional[float] = None,
                         target_f1: Optional[float] = None) -> Path:
    """Cross-validated F1 and coverage along the threshold grid."""
    path = Path(path)
    thresholds = [r["threshold"] for r in records]
    f1s = [r["f1"] for r in records]
    fractions = [r["classified_fraction"] for r in records]
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(thresholds, f1s, color="tab:blue", label="F1 (classified only)")
    ax.plot(thresholds, fractions, color="tab:orange", label="classified fraction")
    if target_f1 is not None:
        ax.axhline(target_f1, color="tab:blue", linestyle=":", linewidth=1,
                   label=f"F1 target {target_f1:.2f}")
    if chosen is not None:
        ax.axvline(chosen, color="black", linestyle="--", linewidth=1,
                   label=f"chosen threshold {chosen:.2f}")
    ax.set_xlabel("relevance threshold")
    ax.set_ylabel("cross-validated score")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower left", fontsize=8)
    ax.set_title("Threshold tuning")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_window_comparison(records: Sequence[dict], path) -> Path:
    """Cascade vs single-window F1 and coverage across max lookback."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5), sharex=True)
    styles = {"ensemble": ("tab:blue", "o", "cascade"),
              "single": ("tab:orange", "s", "single window")}
    for kind, (color, marker, label) in styles.items():
        rows = sorted(
            (r for r in records if r["kind"] == kind),
            key=lambda r: r["max_window"],
        )
        if not rows:
            continue
        xs = [r["max_window"] for r in rows]
        ax1.plot(xs, [r["mean_f1"] for r in rows],
                 color=color, marker=marker, markersize=4, label=label)
        ax2.plot(xs, [r["mean_classified_fraction"] for r in rows],
                 color=color, marker=marker, markersize=4, label=label)
    for ax, ylabel in ((ax1, "mean F1 (classified only)"),
                       (ax2, "mean classified fraction")):
        ax.set_xscale("log")
        ax.set_xlabel("max lookback window (min)")
        ax.set_ylabel(ylabel)
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="lower right", fontsize=8)
    fig.suptitle("Window grid comparison")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_confusion(report: EvalReport, path) -> Path:
    """Row-normalized confusion heatmap with the unclassified column kept."""
    path = Path(path)
    classes = [c for c in CLASS_ORDER if c in report.confusion]
    row_labels = [c.value for c in classes]
    columns = [c.value for c in CLASS_ORDER] + [UNCLASSIFIED]
    matrix = np.array(
        [[report.confusion[t].get(p, 0) for p in columns] for t in classes],
        dtype=float,
    )
    totals = matrix.sum(axis=1, keepdims=True)
    normalized = np.divide(matrix, totals, out=np.zeros_like(matrix),
                           where=totals > 0)
    fig, ax = plt.subplots(figsize=(8.5, 7))
    im = ax.imshow(normalized, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(columns)))
    ax.set_xticklabels(columns, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(classes)))
    ax.set_yticklabels(row_labels, fontsize=8)
    for i in range(len(classes)):
        for j in range(len(columns)):
            count = int(matrix[i, j])
            if count:
                ax.text(j, i, str(count), ha="center", va="center", fontsize=7,
                        color="white" if normalized[i, j] > 0.5 else "black")
    ax.set_xlabel("suggested")
    ax.set_ylabel("reported")
    ax.set_title(
        f"Confusion (weighted F1 {report.f1_weighted:.3f}, "
        f"coverage {report.classified_fraction:.3f})"
    )
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
