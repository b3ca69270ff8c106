"""Temporal weight kernels and spike-trace accumulators.

Two kernel families are supported:

* ``exponential_normalized``: w[k] = exp(-decay*k) for k = 1..K, scaled to
  sum to one.  This is the experiment kernel (decay 0.5, K 30 by default).
* ``discrete_alpha``: w[k] = a*(1-a*eps)**k for k = 0..K-1, the discrete
  counterpart of the continuous filter a*exp(-a*tau).  Untruncated, it is
  exactly the recursive trace y' = (1-a*eps)*y + a*x.

Traces are weighted sums over the most recent samples, newest first.  While
the history is shorter than the kernel, the partial sum is divided by the
partial weight mass so normalized kernels stay unbiased for constant inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

EXPONENTIAL_NORMALIZED = "exponential_normalized"
DISCRETE_ALPHA = "discrete_alpha"
FAMILIES = (EXPONENTIAL_NORMALIZED, DISCRETE_ALPHA)


def exponential_normalized(decay: float, K: int) -> np.ndarray:
    """Normalized exponential weights; index 0 holds the newest-sample weight."""
    if decay <= 0:
        raise ConfigError(f"decay must be positive, got {decay}")
    if K < 1:
        raise ConfigError(f"kernel horizon must be >= 1, got {K}")
    w = np.exp(-decay * np.arange(1, K + 1))
    return w / w.sum()


def discrete_alpha(a: float, eps_step: float, K: int) -> np.ndarray:
    """Geometric alpha weights a*(1-a*eps)**k for k = 0..K-1."""
    if K < 1:
        raise ConfigError(f"kernel horizon must be >= 1, got {K}")
    ae = a * eps_step
    if not 0 < ae <= 1:
        raise ConfigError(
            f"a*eps_step must lie in (0, 1], got {a} * {eps_step} = {ae}")
    return a * (1.0 - ae) ** np.arange(K)


def continuous_alpha(a: float, tau) -> float:
    """Continuous filter a*exp(-a*tau); integrates to 1 over tau >= 0."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ConfigError("tau must be non-negative")
    out = a * np.exp(-a * tau)
    return float(out) if out.ndim == 0 else out


def recursive_trace(prev, spike, a: float, eps_step: float):
    """One step of the recursive accumulator: (1-a*eps)*prev + a*spike."""
    ae = a * eps_step
    if not 0 < ae <= 1:
        raise ConfigError(
            f"a*eps_step must lie in (0, 1], got {a} * {eps_step} = {ae}")
    return (1.0 - ae) * prev + a * np.asarray(spike, dtype=float)


@dataclass(frozen=True)
class KernelSpec:
    """Serializable kernel description used in run configs.

    ``decay`` applies to the normalized family; ``a`` and ``eps_step`` to the
    alpha family.  ``K`` is the window horizon of the weight vector.
    """

    family: str = EXPONENTIAL_NORMALIZED
    decay: float = 0.5
    a: float = 0.5
    eps_step: float = 1.0
    K: int = 30

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        self.weights()  # surface parameter errors at construction

    def weights(self) -> np.ndarray:
        if self.family == EXPONENTIAL_NORMALIZED:
            return exponential_normalized(self.decay, self.K)
        return discrete_alpha(self.a, self.eps_step, self.K)

    def to_dict(self) -> dict:
        return {"family": self.family, "decay": self.decay, "a": self.a,
                "eps_step": self.eps_step, "K": self.K}

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelSpec":
        known = {"family", "decay", "a", "eps_step", "K"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown kernel fields {sorted(extra)}")
        merged = {**cls().to_dict(), **doc}
        merged["K"] = int(merged["K"])
        return cls(**merged)


class SpikeHistory:
    """Most-recent-first sample window for a set of channels.

    Each channel advances independently: sequential schedules push into one
    channel per step while the others keep their previous window.  ``t``
    counts total pushes (any channel).
    """

    def __init__(self, capacity: int, channels: int):
        if capacity < 1 or channels < 1:
            raise ConfigError("capacity and channel count must be >= 1")
        self.capacity = capacity
        self.channels = channels
        self.buf = np.zeros((capacity, channels))
        self.count = np.zeros(channels, dtype=np.int64)
        self.t = 0

    def push(self, channel: int, value: float):
        self.buf[1:, channel] = self.buf[:-1, channel]
        self.buf[0, channel] = value
        self.count[channel] = min(self.count[channel] + 1, self.capacity)
        self.t += 1

    def push_all(self, values):
        self.buf[1:] = self.buf[:-1]
        self.buf[0] = values
        np.minimum(self.count + 1, self.capacity, out=self.count)
        self.t += 1

    def fill(self, channel: int, value: float):
        """Force a channel's whole window to a constant (clamped units)."""
        self.buf[:, channel] = value
        self.count[channel] = self.capacity

    def weighted_sum(self, weights: np.ndarray, renormalize: bool = True) -> np.ndarray:
        """Per-channel weighted sum of the newest samples.

        Channels with fewer samples than weights use the partial sum; with
        ``renormalize`` it is divided by the partial weight mass.  Empty
        channels yield 0.
        """
        k = min(len(weights), self.capacity)
        w = weights[:k]
        valid = np.arange(k)[:, None] < np.minimum(self.count, k)[None, :]
        s = (w[:, None] * self.buf[:k] * valid).sum(axis=0)
        if renormalize:
            mass = (w[:, None] * valid).sum(axis=0)
            np.divide(s, mass, out=s, where=mass > 0)
        return s

    def copy(self) -> "SpikeHistory":
        clone = SpikeHistory(self.capacity, self.channels)
        clone.buf = self.buf.copy()
        clone.count = self.count.copy()
        clone.t = self.t
        return clone


def convolve_trace(history: SpikeHistory, weights: np.ndarray,
                   channel: int = 0, renormalize: bool = True) -> float:
    """Weighted sum of one channel's recent samples, newest first."""
    return float(history.weighted_sum(np.asarray(weights, dtype=float),
                                      renormalize=renormalize)[channel])
