"""Figure rendering for CLI reports.

Each function renders one PNG next to the delimited file it illustrates.
Figures are a convenience view; the CSV/JSON files remain the canonical
outputs and the only ones with byte-identity guarantees.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .inference import moving_average

_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_trajectory(traj, path, window: int = 30, max_channels: int = 8):
    """Activation traces with moving-average overlay for sampled runs."""
    free = traj.hidden_channels()[:max_channels]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    smooth = moving_average(traj.theta, window)
    t = np.arange(1, traj.steps + 1)
    for k in free:
        unit, sym = traj.channels[k]
        label = f"{unit}" if sym == "-" else f"{unit}:{sym}"
        (line,) = ax.plot(t, traj.theta[:, k], alpha=0.45, lw=0.8, label=label)
        if traj.algorithm != "variational":
            ax.plot(t, smooth[:, k], color=line.get_color(), lw=1.6)
    ax.set_xlabel("step")
    ax.set_ylabel("activation")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{traj.algorithm} / {traj.schedule}")
    ax.legend(loc="center right", fontsize=8)
    _save(fig, path)


def render_field(field, path):
    """Residual-norm heat map with the drift vector field on top."""
    n = int(round(np.sqrt(len(field))))
    y1 = field[:, 0].reshape(n, n)
    y2 = field[:, 1].reshape(n, n)
    sq = field[:, 2].reshape(n, n)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.4))
    im = axes[0].pcolormesh(y1, y2, sq, shading="auto", cmap="jet")
    fig.colorbar(im, ax=axes[0])
    axes[0].set_title("squared residual norm")
    stride = max(1, n // 24)
    axes[1].quiver(y1[::stride, ::stride], y2[::stride, ::stride],
                   field[:, 3].reshape(n, n)[::stride, ::stride],
                   field[:, 4].reshape(n, n)[::stride, ::stride],
                   angles="xy")
    axes[1].set_title("drift field")
    for ax in axes:
        ax.set_xlabel("y1")
        ax.set_ylabel("y2")
        ax.set_aspect("equal")
    _save(fig, path)


def render_scatter(pairs, path, xlabel="sampled-run mean",
                   ylabel="variational value"):
    fig, ax = plt.subplots(figsize=(4.6, 4.4))
    ax.plot([0, 1], [0, 1], color="0.7", lw=1)
    ax.scatter(pairs[:, 0], pairs[:, 1], s=12, alpha=0.7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    _save(fig, path)


def render_histogram(hist_rows, path, xlabel="value"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    lo = hist_rows[:, 0]
    ax.bar(lo, hist_rows[:, 2], width=hist_rows[:, 1] - lo, align="edge",
           edgecolor="black", linewidth=0.4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    _save(fig, path)


def render_raster(sim, path, max_steps: int = 2000):
    steps = min(sim.steps, max_steps)
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ts, neurons = np.nonzero(sim.raster[:steps])
    ax.scatter(ts + 1, neurons, s=4, marker="|")
    ax.set_xlabel("step")
    ax.set_ylabel("neuron")
    ax.set_ylim(-0.5, sim.net_n - 0.5)
    _save(fig, path)
