"""Matplotlib figures rendered next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import SECURITY_RATING, TimingReport, TimingRow
from .face_identity import (
    PAD_PREDICTED_CLASSES,
    PAD_TRUE_CLASSES,
    ConfusionMatrix,
)

_CLASS_TITLES = {"not_spoof": "Not spoof", "spoof": "Spoof", "uncertain": "Uncertain"}


def save_trials_figure(row: TimingRow, path: str | Path) -> None:
    """Stacked create/verify bars per trial, with the average total marked."""
    trials = np.arange(1, len(row.trial_times_ms) + 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(trials, row.trial_create_ms, label="create challenge", color="#4878cf")
    ax.bar(
        trials,
        row.trial_verify_ms,
        bottom=row.trial_create_ms,
        label="verify + authenticate",
        color="#ee854a",
    )
    ax.axhline(row.total_ms, linestyle="--", color="black", linewidth=1, label="average total")
    ax.set_xlabel("trial")
    ax.set_ylabel("time (ms)")
    ax.set_title(row.label)
    ax.set_xticks(trials)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_comparison_figure(report: TimingReport, path: str | Path) -> None:
    """Horizontal bars of per-model totals; log scale absorbs the spread."""
    labels = [row.label for row in report.rows]
    totals = [row.total_ms for row in report.rows]
    if report.combined is not None:
        labels.append(report.combined.label)
        totals.append(report.combined.total_ms)
    fig, ax = plt.subplots(figsize=(8, 0.8 * len(labels) + 1.5))
    positions = np.arange(len(labels))
    ax.barh(positions, totals, color="#6acc64")
    ax.set_yticks(positions)
    ax.set_yticklabels(
        [f"{label}\n({SECURITY_RATING.get(label, '-')})" for label in labels], fontsize=8
    )
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("time (ms, log scale)")
    ax.set_title("Authentication model comparison")
    for pos, total in zip(positions, totals):
        ax.annotate(f"{total:.1f} ms", (total, pos), va="center", ha="left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_figure(matrix: ConfusionMatrix, path: str | Path) -> None:
    """Row-normalized heatmap of the PAD confusion matrix."""
    rates = np.array(
        [[matrix.rates(t)[p] for p in PAD_PREDICTED_CLASSES] for t in PAD_TRUE_CLASSES]
    )
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    image = ax.imshow(rates, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(PAD_PREDICTED_CLASSES)))
    ax.set_xticklabels([_CLASS_TITLES[p.value] for p in PAD_PREDICTED_CLASSES])
    ax.set_yticks(range(len(PAD_TRUE_CLASSES)))
    ax.set_yticklabels([_CLASS_TITLES[t.value] for t in PAD_TRUE_CLASSES])
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"PAD confusion (accuracy {matrix.accuracy * 100:.2f}%)")
    for i in range(rates.shape[0]):
        for j in range(rates.shape[1]):
            color = "white" if rates[i, j] > 0.5 else "black"
            ax.text(j, i, f"{rates[i, j] * 100:.1f}%", ha="center", va="center", color=color)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
