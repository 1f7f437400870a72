"""Figure rendering for the CLI report paths.

Every renderer writes a PNG next to the delimited output it illustrates.
Uses the Agg backend so headless runs work.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_KIND_COLORS = {
    "chat": "tab:blue",
    "gcn": "tab:red",
    "scalar_attention": "tab:green",
    "freq_gate": "tab:orange",
}


def _color(kind: str):
    return _KIND_COLORS.get(kind, "tab:gray")


def plot_energy_traces(traces, path: str, title: str = "Dirichlet energy by depth") -> None:
    """Log-scale energy per layer, one line per model kind."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for tr in traces:
        energy = np.maximum(tr.per_layer_energy, 1e-300)
        ax.plot(np.arange(energy.size), energy, label=tr.model_kind,
                color=_color(tr.model_kind))
    ax.set_yscale("log")
    ax.set_xlabel("layer")
    ax.set_ylabel("Dirichlet energy")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_depth_sweep(rows, path: str, metric_name: str = "test accuracy") -> None:
    """rows: iterable of (model_kind, layers, mean, std)."""
    by_kind = {}
    for kind, layers, mean, std in rows:
        by_kind.setdefault(kind, []).append((layers, mean, std))
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, pts in by_kind.items():
        pts.sort()
        xs = [p[0] for p in pts]
        means = np.array([p[1] for p in pts])
        stds = np.array([p[2] for p in pts])
        ax.plot(xs, means, marker="o", label=kind, color=_color(kind))
        ax.fill_between(xs, means - stds, means + stds, alpha=0.15, color=_color(kind))
    ax.set_xscale("log", base=2)
    ax.set_xticks(sorted({p[0] for pts in by_kind.values() for p in pts}))
    ax.get_xaxis().set_major_formatter(plt.ScalarFormatter())
    ax.set_xlabel("message-passing layers")
    ax.set_ylabel(metric_name)
    ax.set_title("Depth sweep")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_training_curves(history, path: str) -> None:
    epochs = [em.epoch for em in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(epochs, [em.train_loss for em in history], color="tab:blue")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss")
    ax2.plot(epochs, [em.val_accuracy for em in history], color="tab:green",
             label="val accuracy")
    ax2.plot(epochs, [em.test_metric for em in history], color="tab:orange",
             alpha=0.6, label="test metric")
    ax2.set_xlabel("epoch")
    ax2.set_ylim(0.0, 1.05)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_cosine_heatmaps(dumps, path: str) -> None:
    """Grid of heatmaps: rows are nodes, columns are layers."""
    if not dumps:
        return
    n_rows = len(dumps)
    n_cols = max(len(d.layers) for d in dumps)
    fig, axes = plt.subplots(n_rows, n_cols,
                             figsize=(2.2 * n_cols, 2.2 * n_rows), squeeze=False)
    for r, d in enumerate(dumps):
        for c in range(n_cols):
            ax = axes[r][c]
            if c >= len(d.layers):
                ax.axis("off")
                continue
            im = ax.imshow(d.matrices[c], vmin=-1.0, vmax=1.0, cmap="RdBu_r")
            ax.set_title(f"node {d.node} / layer {d.layers[c]}", fontsize=8)
            ax.set_xticks([])
            ax.set_yticks([])
    fig.colorbar(im, ax=[ax for row in axes for ax in row], shrink=0.8)
    fig.savefig(path, dpi=120)
    plt.close(fig)
