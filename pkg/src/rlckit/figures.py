"""Matplotlib rendering for the report path.

Figures are written next to the delimited outputs they visualize.  The Agg
backend is forced so rendering works headless and the PNG bytes stay
deterministic for identical inputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .anfis import TrainHistory
from .rlc import RlcSelection

DPI = 150

matplotlib.rcParams.update(
    {
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "figure.figsize": (8.0, 4.0),
        "lines.linewidth": 1.0,
    }
)


def _save(fig, path) -> None:
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_history_figure(history: TrainHistory, path) -> None:
    """Training/checking RMSE per epoch with the step-size trace below."""
    epochs = np.arange(1, len(history.records) + 1)
    train_rmse = [r.train_rmse for r in history.records]
    check_rmse = [r.check_rmse for r in history.records]
    steps = [r.step for r in history.records]

    fig, (ax_rmse, ax_step) = plt.subplots(
        2, 1, sharex=True, figsize=(8.0, 5.0), height_ratios=[3, 1]
    )
    ax_rmse.plot(epochs, train_rmse, label="training RMSE")
    ax_rmse.plot(epochs, check_rmse, label="checking RMSE")
    if history.best_epoch is not None:
        ax_rmse.axvline(history.best_epoch + 1, color="k", ls="--", lw=0.8, label="best epoch")
    ax_rmse.set_ylabel("RMSE (kW)")
    ax_rmse.legend(loc="upper right")
    ax_step.plot(epochs, steps, color="tab:green")
    ax_step.set_ylabel("step")
    ax_step.set_xlabel("epoch")
    fig.tight_layout()
    _save(fig, path)


def save_estimate_figure(actual, estimate, path, label: str = "") -> None:
    """Estimate series overlaid on its comparison data."""
    t = np.arange(len(actual))
    fig, ax = plt.subplots()
    ax.plot(t, actual, label="actual", lw=0.7)
    ax.plot(t, estimate, label="estimate", lw=0.7, alpha=0.8)
    ax.set_xlabel("hour")
    ax.set_ylabel("load (kW)")
    if label:
        ax.set_title(label)
    ax.legend(loc="upper right")
    fig.tight_layout()
    _save(fig, path)


def save_error_figure(error, path) -> None:
    t = np.arange(len(error))
    fig, ax = plt.subplots()
    ax.plot(t, error, lw=0.7, color="tab:red")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("hour")
    ax.set_ylabel("error (kW)")
    fig.tight_layout()
    _save(fig, path)


def save_selection_figure(selection: RlcSelection, actual, estimate, ranges, path) -> None:
    """The 8 candidate windows side by side, the winner shaded."""
    width = selection.curve.shape[0]
    fig, ax = plt.subplots(figsize=(9.0, 4.0))
    for k, (lo, hi) in enumerate(ranges):
        x = np.arange(k * width, (k + 1) * width)
        ax.plot(x, actual[lo:hi], color="tab:blue", lw=0.7)
        ax.plot(x, estimate[lo:hi], color="tab:orange", lw=0.7)
        if k:
            ax.axvline(k * width, color="k", lw=0.5, alpha=0.5)
        score = selection.scores[k]
        note = "masked" if score.mape is None else f"{score.mape:.4f}%"
        ax.text((k + 0.5) * width, 0.02, note, transform=ax.get_xaxis_transform(),
                ha="center", fontsize=7)
    lo = selection.selected * width
    ax.axvspan(lo, lo + width, color="tab:green", alpha=0.15)
    ax.plot([], [], color="tab:blue", label="target")
    ax.plot([], [], color="tab:orange", label="estimate")
    ax.set_xlabel("hour within concatenated windows")
    ax.set_ylabel("load (kW)")
    ax.set_title(
        f"{selection.kind} selection, month {selection.month}: "
        f"window {selection.selected + 1} ({selection.selected_score.year_week_label})"
    )
    ax.legend(loc="upper right")
    fig.tight_layout()
    _save(fig, path)
