"""Post-processing statistics over recorded trajectories.

Everything here is pure computation over immutable trajectory arrays: the
summaries behind the scatter of sampled-run means against converged
variational activations, the std-versus-mean relation, and the residual
histograms that quantify how well split networks preserve the pair-sum and
copy-equality identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError
from .inference import Trajectory, moving_average
from .transforms import ReadbackResult


@dataclass
class TrajectorySummary:
    """Per-channel sample statistics of one run."""

    channels: list
    mean: np.ndarray
    std: np.ndarray
    terminal_mean: np.ndarray
    smoothed: np.ndarray      # trailing moving average, (steps, channels)
    window: int
    terminal_window: int

    def to_dict(self) -> dict:
        return {"window": self.window,
                "terminal_window": self.terminal_window,
                "channels": [
                    {"unit": unit, "channel": sym,
                     "mean": float(self.mean[k]), "std": float(self.std[k]),
                     "terminal_mean": float(self.terminal_mean[k])}
                    for k, (unit, sym) in enumerate(self.channels)]}


def summarize(traj: Trajectory, window: int = 30,
              terminal_window: int = 50) -> TrajectorySummary:
    """Mean, std, moving average and terminal-window mean per channel."""
    steps = traj.steps
    if not 1 <= window <= steps:
        raise ConfigError(f"window {window} outside [1, {steps}]")
    if not 1 <= terminal_window <= steps:
        raise ConfigError(f"terminal window {terminal_window} outside [1, {steps}]")
    theta = traj.theta
    return TrajectorySummary(
        channels=list(traj.channels),
        mean=theta.mean(axis=0),
        std=theta.std(axis=0),
        terminal_mean=theta[steps - terminal_window:].mean(axis=0),
        smoothed=moving_average(theta, window),
        window=window,
        terminal_window=terminal_window)


@dataclass
class ScatterResult:
    """Sampled-run trajectory means paired with converged variational values."""

    channels: list
    pairs: np.ndarray  # (m, 2): (sampled mean, variational terminal)
    max_abs_dev: float
    mean_abs_dev: float


def scatter_mean_vs_var(ssi_traj: Trajectory, var_traj: Trajectory,
                        include_clamped: bool = False) -> ScatterResult:
    """Pair each channel's sampled-trajectory mean with the converged
    variational activation of the same channel.

    Both runs must come from the same model and observation; deviation
    statistics cover the free (hidden) channels.
    """
    if ssi_traj.source_id != var_traj.source_id:
        raise ValidationError("runs come from different models or observations")
    if ssi_traj.n_channels != var_traj.n_channels:
        raise ValidationError("channel layouts differ")
    means = ssi_traj.theta.mean(axis=0)
    converged = var_traj.theta[-1]
    free = np.nonzero(~ssi_traj.clamped)[0]
    keep = np.arange(ssi_traj.n_channels) if include_clamped else free
    pairs = np.column_stack([means[keep], converged[keep]])
    dev = np.abs(means[free] - converged[free])
    return ScatterResult(
        channels=[ssi_traj.channels[k] for k in keep], pairs=pairs,
        max_abs_dev=float(dev.max()), mean_abs_dev=float(dev.mean()))


@dataclass
class StdMeanResult:
    """Per-channel (mean, std) pairs with a binned extremes-vs-center summary."""

    channels: list
    pairs: np.ndarray               # (C, 2): (mean, std)
    extreme_bin_mean_std: float     # mean std over channels with mean in
                                    # [0, 0.1] or [0.9, 1]; NaN if none
    center_bin_mean_std: float      # same over mean in [0.4, 0.6]


def _binned_std(means: np.ndarray, stds: np.ndarray) -> tuple:
    extreme = (means <= 0.1) | (means >= 0.9)
    center = (means >= 0.4) & (means <= 0.6)
    e = float(stds[extreme].mean()) if extreme.any() else float("nan")
    c = float(stds[center].mean()) if center.any() else float("nan")
    return e, c


def std_vs_mean(traj: Trajectory) -> StdMeanResult:
    """Channel std against channel mean for one sampled run."""
    means = traj.theta.mean(axis=0)
    stds = traj.theta.std(axis=0)
    e, c = _binned_std(means, stds)
    return StdMeanResult(channels=list(traj.channels),
                         pairs=np.column_stack([means, stds]),
                         extreme_bin_mean_std=e, center_bin_mean_std=c)


def combined_std_vs_mean(results) -> tuple:
    """Pooled extremes-vs-center summary over several runs' pairs."""
    pairs = np.vstack([r.pairs for r in results])
    return _binned_std(pairs[:, 0], pairs[:, 1])


@dataclass
class SplitResiduals:
    """Spread of the split-identity residual series of one readback.

    ``pair_std[i]`` is the std over time of theta_A + theta_B - 1 for unit
    i; ``dale_std`` the std of (excitatory - inhibitory) per duplicated
    neuron.  Quantiles summarize each list.
    """

    pair_units: list
    pair_std: np.ndarray
    pair_quantiles: dict
    dale_units: list
    dale_std: np.ndarray
    dale_quantiles: dict

    def to_dict(self) -> dict:
        return {
            "pair": {"units": list(self.pair_units),
                     "std": self.pair_std.tolist(),
                     "quantiles": self.pair_quantiles},
            "dale": {"units": list(self.dale_units),
                     "std": self.dale_std.tolist(),
                     "quantiles": self.dale_quantiles},
        }


def _quantiles(values: np.ndarray) -> dict:
    if len(values) == 0:
        return {}
    return {str(q): float(np.quantile(values, q))
            for q in (0.1, 0.25, 0.5, 0.75, 0.9)}


def split_residuals(result: ReadbackResult) -> SplitResiduals:
    """Residual standard deviations of a split-network run after readback."""
    pair_std = (result.pair_residual.std(axis=0)
                if result.pair_residual is not None else np.empty(0))
    dale_std = (result.dale_residual.std(axis=0)
                if result.dale_residual is not None else np.empty(0))
    return SplitResiduals(
        pair_units=list(result.pair_units), pair_std=pair_std,
        pair_quantiles=_quantiles(pair_std),
        dale_units=list(result.dale_units), dale_std=dale_std,
        dale_quantiles=_quantiles(dale_std))


def histogram(values, bins: int = 20, lo: float = None, hi: float = None):
    """Counts over equal-width bins; returns (bin_lo, bin_hi, count) rows."""
    values = np.asarray(values, dtype=float)
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    lo = float(values.min()) if lo is None else lo
    hi = float(values.max()) if hi is None else hi
    if hi <= lo:
        hi = lo + 1e-12
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return np.column_stack([edges[:-1], edges[1:], counts])
