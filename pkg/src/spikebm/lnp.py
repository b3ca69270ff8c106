"""Discrete-time spiking-network simulator with Bernoulli spike generation.

One step of the network with trace constant ``a`` and time step ``eps``:

    rate    lam_i = sigmoid( sum_j W[i, j] * y_j + e_i )
    spike   x_i ~ Bernoulli(eps * lam_i)
    trace   y_i' = (1 - a*eps) * y_i + a * x_i

Spike draws are addressed by (seed, stream, step, neuron), so rasters are
reproducible and independent of execution order, and they coincide exactly
with the semi-stochastic engine run on the same network under the same
seed (eps = 1, alpha kernel).

``lecam_check`` quantifies the Bernoulli-process approximation of a Poisson
process: the exact spike-count distribution over an interval is compared in
total variation against the matching Poisson law, which is bounded by the
sum of squared per-step probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import poisson

from . import rng
from .errors import CapacityError, ConfigError
from .kernels import recursive_trace
from .transforms import LnpNetwork

SIMULATE_CELL_CAP = 200_000_000
LECAM_STEP_CAP = 100_000


@dataclass
class LnpState:
    """Current traces, rates and spike indicators of a simulation."""

    t: int
    y: np.ndarray
    lam: np.ndarray
    x: np.ndarray

    def copy(self) -> "LnpState":
        return LnpState(t=self.t, y=self.y.copy(), lam=self.lam.copy(),
                        x=self.x.copy())


def rate(net: LnpNetwork, y) -> np.ndarray:
    """Entrywise firing rate sigmoid(W @ y + e)."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ConfigError("traces must be finite")
    return expit(net.W @ y + net.e)


def initial_state(net: LnpNetwork, y0=None) -> LnpState:
    y = np.zeros(net.n) if y0 is None else np.asarray(y0, dtype=float).copy()
    if y.shape != (net.n,):
        raise ConfigError(f"y0 length {y.shape} != ({net.n},)")
    return LnpState(t=0, y=y, lam=rate(net, y), x=np.zeros(net.n, dtype=np.int8))


def lnp_step(net: LnpNetwork, state: LnpState, draws) -> LnpState:
    """Advance one step; ``draws`` supplies the per-(step, neuron) uniforms."""
    r = draws.row(state.t) if hasattr(draws, "row") else np.asarray(draws)
    spikes = (r[:net.n] < net.eps_step * state.lam).astype(np.int8)
    y = recursive_trace(state.y, spikes, net.a, net.eps_step)
    return LnpState(t=state.t + 1, y=y, lam=rate(net, y), x=spikes)


@dataclass
class SimResult:
    """Spike raster (steps, n) and trace trajectory (steps, n)."""

    net_n: int
    steps: int
    seed: int
    stream: int
    raster: np.ndarray
    traces: np.ndarray
    rates: np.ndarray
    y0: np.ndarray


def simulate(net: LnpNetwork, steps: int, seed: int, y0=None,
             stream: int = 0) -> SimResult:
    """Seed-deterministic simulation; trial ``stream`` selects an
    independent substream of the same seed."""
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if steps * net.n > SIMULATE_CELL_CAP:
        raise CapacityError("simulation record would exceed the cell guard")
    state = initial_state(net, y0)
    spike_stream = rng.trial_stream(rng.STREAM_SPIKE, stream)
    raster = np.empty((steps, net.n), dtype=np.int8)
    traces = np.empty((steps, net.n))
    rates = np.empty((steps, net.n))
    block = 8192
    for t0 in range(0, steps, block):
        m = min(block, steps - t0)
        grid = rng.uniform_grid(seed, spike_stream, m, net.n, t0=t0)
        for k in range(m):
            spikes = (grid[k] < net.eps_step * state.lam).astype(np.int8)
            y = recursive_trace(state.y, spikes, net.a, net.eps_step)
            state = LnpState(t=state.t + 1, y=y, lam=rate(net, y), x=spikes)
            raster[t0 + k] = spikes
            traces[t0 + k] = y
            rates[t0 + k] = state.lam
    return SimResult(net_n=net.n, steps=steps, seed=seed, stream=stream,
                     raster=raster, traces=traces, rates=rates,
                     y0=initial_state(net, y0).y)


def simulate_batch(net: LnpNetwork, trials: int, steps: int, seed: int,
                   y0_batch) -> tuple:
    """Lock-step simulation of many trials; trial k consumes the same draws
    as ``simulate(..., stream=k)``.  Returns (traces (trials, steps, n),
    rasters (trials, steps, n))."""
    y0_batch = np.asarray(y0_batch, dtype=float)
    if y0_batch.shape != (trials, net.n):
        raise ConfigError("y0_batch must be (trials, n)")
    if trials * steps * net.n > SIMULATE_CELL_CAP:
        raise CapacityError("batch record would exceed the cell guard")
    draws = np.empty((trials, steps, net.n))
    for k in range(trials):
        draws[k] = rng.uniform_grid(seed, rng.trial_stream(rng.STREAM_SPIKE, k),
                                    steps, net.n)
    y = y0_batch.copy()
    traces = np.empty((trials, steps, net.n))
    rasters = np.empty((trials, steps, net.n), dtype=np.int8)
    ae = net.a * net.eps_step
    for t in range(steps):
        lam = expit(y @ net.W.T + net.e)
        spikes = (draws[:, t] < net.eps_step * lam).astype(np.int8)
        y = (1.0 - ae) * y + net.a * spikes
        rasters[:, t] = spikes
        traces[:, t] = y
    return traces, rasters


# ---------------------------------------------------------------------------
# Poisson approximation quality


@dataclass
class LecamReport:
    lam: float
    eps_step: float
    steps: int
    counts: np.ndarray       # exact spike-count pmf over the interval
    poisson_ref: np.ndarray  # matching Poisson pmf on the same support
    tv: float
    bound: float             # sum of squared per-step probabilities

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "eps": self.eps_step, "steps": self.steps,
                "tv": self.tv, "bound": self.bound}


def count_distribution(p: float, steps: int) -> np.ndarray:
    """Exact pmf of the spike count: ``steps`` convolutions of (1-p, p)."""
    pmf = np.array([1.0])
    for _ in range(steps):
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
        if len(pmf) > 64 and pmf[-1] < 1e-18:  # drop negligible tail
            keep = np.nonzero(pmf >= 1e-18)[0]
            pmf = pmf[:keep[-1] + 1] if len(keep) else pmf[:1]
    keep = np.nonzero(pmf >= 1e-18)[0]
    return pmf[:keep[-1] + 1] if len(keep) else pmf[:1]


def lecam_check(lambda_const: float, eps_step: float,
                interval_steps: int) -> LecamReport:
    """Total variation between the exact count law and Poisson, plus bound."""
    p = eps_step * lambda_const
    if not 0 <= p <= 1:
        raise ConfigError(f"eps*lambda must lie in [0, 1], got {p}")
    if interval_steps < 1 or interval_steps > LECAM_STEP_CAP:
        raise ConfigError(
            f"interval steps must lie in [1, {LECAM_STEP_CAP}]")
    pmf = count_distribution(p, interval_steps)
    mean = interval_steps * p
    support = np.arange(len(pmf))
    pois = poisson.pmf(support, mean)
    pois_tail = 1.0 - pois.sum()  # Poisson mass beyond the binomial support
    tv = 0.5 * (np.abs(pmf - pois).sum() + max(pois_tail, 0.0)
                + max(1.0 - pmf.sum(), 0.0))
    bound = interval_steps * p * p
    return LecamReport(lam=lambda_const, eps_step=eps_step,
                       steps=interval_steps, counts=pmf, poisson_ref=pois,
                       tv=float(tv), bound=float(bound))
