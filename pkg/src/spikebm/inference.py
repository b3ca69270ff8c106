"""Gibbs, mean-field and semi-stochastic inference engines.

All three engines share one proposal computation: for unit i and state u,

    phi[i, u] = sigmoid( sum_{j in blanket(i), v} W[i,u,j,v] * theta[j,v]
                         - b[i,u] )

They differ in what ``theta`` is and how it is updated:

* Gibbs: theta holds 0/1 indicators of the current assignment; the touched
  unit resamples from its proposal pair.
* variational: theta holds activation probabilities; the touched unit
  assigns theta := phi (deterministic coordinate descent).
* semi-stochastic: the proposal is sampled like Gibbs, but theta is a
  kernel-weighted sum of the unit's recent samples, so the state carried
  forward is a smoothed trace.

Schedules: ``sequential_cyclic`` and ``sequential_random_scan`` touch one
hidden unit per step; ``parallel_synchronized`` updates every hidden unit
from the step-(t-1) snapshot.  All randomness is addressed by
(seed, stream, step, channel) so results are independent of execution
order (see :mod:`spikebm.rng`).

The same engines run on event networks produced by the transforms module:
there each neuron is a single channel, samples are drawn independently per
channel, and the alpha-kernel trace is accumulated recursively.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, xlogy

from . import rng
from .errors import CapacityError, ConfigError, ValidationError
from .kernels import DISCRETE_ALPHA, EXPONENTIAL_NORMALIZED, KernelSpec, SpikeHistory
from .model import (BoltzmannMachine, PairwiseParams, dense_terms,
                    derive_pairwise, model_to_dict, state_index)

SEQUENTIAL_CYCLIC = "sequential_cyclic"
SEQUENTIAL_RANDOM_SCAN = "sequential_random_scan"
PARALLEL = "parallel_synchronized"
SCHEDULES = (SEQUENTIAL_CYCLIC, SEQUENTIAL_RANDOM_SCAN, PARALLEL)

ALGORITHMS = ("gibbs", "variational", "ssi")

RECORD_CELL_CAP = 50_000_000  # steps * channels guard for full recording
TABLE_UNIT_CAP = 12           # state-table fast path guard


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run bit for bit."""

    algorithm: str
    schedule: str = PARALLEL
    steps: int = 100
    seed: int = 0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    init: object = "uniform_random"  # or "constant_half" or an array
    deterministic: bool = False      # replace samples by their expectation

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if (self.algorithm == "ssi" and self.kernel.family == DISCRETE_ALPHA
                and self.kernel.eps_step != 1.0):
            raise ConfigError(
                "ssi with the alpha kernel requires eps_step == 1")

    def to_dict(self) -> dict:
        init = self.init
        if isinstance(init, np.ndarray):
            init = init.tolist()
        return {"algorithm": self.algorithm, "schedule": self.schedule,
                "steps": self.steps, "seed": self.seed,
                "kernel": self.kernel.to_dict(), "init": init,
                "deterministic": self.deterministic}

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        if "kernel" in doc:
            doc["kernel"] = KernelSpec.from_dict(doc["kernel"])
        if isinstance(doc.get("init"), list):
            doc["init"] = np.asarray(doc["init"], dtype=float)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad run config: {exc}") from exc


@dataclass
class InferenceState:
    """Mutable per-run state shared by the step functions."""

    t: int
    theta: np.ndarray            # (n, 2)
    phi: np.ndarray              # (n, 2), last computed proposals
    y: np.ndarray | None = None  # (n,) int8 assignment (Gibbs/SSI)
    history: SpikeHistory | None = None  # channel 2*i+u (windowed SSI)

    def copy(self) -> "InferenceState":
        return InferenceState(
            t=self.t, theta=self.theta.copy(), phi=self.phi.copy(),
            y=None if self.y is None else self.y.copy(),
            history=None if self.history is None else self.history.copy())


class DrawSource:
    """Block-cached positional access to one spike stream."""

    def __init__(self, seed: int, channels: int, stream: int = rng.STREAM_SPIKE,
                 block: int = 4096):
        self.seed = seed
        self.channels = channels
        self.stream = stream
        self.block = block
        self._cache = {}

    def _load(self, b: int) -> np.ndarray:
        got = self._cache.get(b)
        if got is None:
            got = rng.uniform_grid(self.seed, self.stream, self.block,
                                   self.channels, t0=b * self.block)
            self._cache = {b: got}  # keep one block; access is sequential
        return got

    def at(self, t: int, channel: int) -> float:
        return float(self._load(t // self.block)[t % self.block, channel])

    def row(self, t: int) -> np.ndarray:
        return self._load(t // self.block)[t % self.block]


# ---------------------------------------------------------------------------
# Single-touch step operations; the runners below share their arithmetic


def proposal(params: PairwiseParams, theta: np.ndarray, i: int) -> np.ndarray:
    """Proposal pair (phi_A, phi_B) for unit i given activations theta."""
    logits = np.zeros(2)
    for u in (0, 1):
        acc = -params.b.get((i, u), 0.0)
        for j in params.blanket.get(i, ()):
            for v in (0, 1):
                w = params.W.get((i, u, j, v))
                if w:
                    acc += w * theta[j, v]
        logits[u] = acc
    return expit(logits)


def _sample_pair(phi: np.ndarray, r: float) -> int:
    """Renormalize the proposal pair and pick state A iff r < p_A."""
    total = phi[0] + phi[1]
    p_a = phi[0] / total if total > 0 else 0.5
    return 0 if r < p_a else 1


def gibbs_step(params: PairwiseParams, state: InferenceState, i: int,
               draws: DrawSource) -> InferenceState:
    """Resample unit i from its conditional; all else copied forward."""
    out = state.copy()
    phi = proposal(params, state.theta, i)
    s = _sample_pair(phi, draws.at(state.t, i))
    out.phi[i] = phi
    out.y[i] = s
    out.theta[i, 0] = 1.0 - s
    out.theta[i, 1] = float(s)
    out.t = state.t + 1
    return out


def variational_step(params: PairwiseParams, state: InferenceState,
                     i: int) -> InferenceState:
    """Assign unit i's activations to its proposal; deterministic."""
    out = state.copy()
    phi = proposal(params, state.theta, i)
    out.phi[i] = phi
    out.theta[i] = phi
    out.t = state.t + 1
    return out


def ssi_step(params: PairwiseParams, state: InferenceState, i: int,
             kernel: KernelSpec, draws: DrawSource,
             deterministic: bool = False) -> InferenceState:
    """Sample unit i from its proposal and fold it into the unit's trace.

    Windowed kernels recompute theta from the unit's sample history with
    warm-up renormalization; the alpha kernel updates the trace recursively
    (exactly the untruncated kernel).  ``deterministic`` substitutes the
    sample by its expectation, which turns the engine into a damped
    variational update.
    """
    out = state.copy()
    phi = proposal(params, state.theta, i)
    out.phi[i] = phi
    if deterministic:
        total = phi[0] + phi[1]
        p_a = phi[0] / total if total > 0 else 0.5
        x_a, x_b = p_a, 1.0 - p_a
        s = 0 if p_a >= 0.5 else 1
    else:
        s = _sample_pair(phi, draws.at(state.t, i))
        x_a, x_b = 1.0 - s, float(s)
    out.y[i] = s
    if kernel.family == DISCRETE_ALPHA:
        a = kernel.a
        out.theta[i, 0] = (1.0 - a) * state.theta[i, 0] + a * x_a
        out.theta[i, 1] = (1.0 - a) * state.theta[i, 1] + a * x_b
    else:
        out.history.push(2 * i, x_a)
        out.history.push(2 * i + 1, x_b)
        w = kernel.weights()
        traces = out.history.weighted_sum(w)
        out.theta[i, 0] = traces[2 * i]
        out.theta[i, 1] = traces[2 * i + 1]
    out.t = state.t + 1
    return out


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    """Per-step record of a run.

    ``theta``/``phi`` are (steps, C) with channel 2*i+u on models and one
    channel per neuron on networks.  ``x`` holds sample indicators; -1 marks
    channels that drew no sample that step.
    """

    kind: str                 # "model" or "network"
    algorithm: str
    schedule: str
    seed: int
    channels: list            # (unit, "A"/"B") on models, (neuron, "-") on nets
    theta: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    theta0: np.ndarray
    source_id: str
    config: dict
    clamped: np.ndarray       # bool mask per channel

    @property
    def steps(self) -> int:
        return self.theta.shape[0]

    @property
    def n_channels(self) -> int:
        return self.theta.shape[1]

    def hidden_channels(self) -> np.ndarray:
        return np.nonzero(~self.clamped)[0]

    def channel_names(self) -> list:
        return [f"{unit}{'' if sym == '-' else ':' + sym}"
                for unit, sym in self.channels]


def source_fingerprint(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def params_fingerprint(params: PairwiseParams, observation=None) -> str:
    return source_fingerprint({
        "n": params.n,
        "W": sorted((list(k), v) for k, v in params.W.items()),
        "b": sorted((list(k), v) for k, v in params.b.items()),
        "obs": sorted((observation or {}).items()),
    })


# ---------------------------------------------------------------------------
# Model-space runner


def _init_theta(config: RunConfig, n: int) -> np.ndarray:
    if isinstance(config.init, str):
        if config.init == "constant_half":
            return np.full((n, 2), 0.5)
        if config.init == "uniform_random":
            draws = rng.uniform_grid(config.seed, rng.STREAM_INIT_THETA, n, 2)
            return draws / draws.sum(axis=1, keepdims=True)
        raise ConfigError(f"unknown init mode {config.init!r}")
    theta = np.asarray(config.init, dtype=float)
    if theta.ndim == 1:
        theta = np.stack([theta, 1.0 - theta], axis=1)
    if theta.shape != (n, 2):
        raise ConfigError(f"init vector shape {theta.shape} != ({n}, 2)")
    if np.any(theta < 0) or np.any(theta > 1):
        raise ConfigError("init activations must lie in [0, 1]")
    return theta.copy()


def _resolve_run_observation(source, observation):
    if isinstance(source, BoltzmannMachine):
        params = derive_pairwise(source)
        obs = observation if observation is not None else source.observed
        obs = {i: state_index(s) for i, s in (obs or {}).items()}
        missing = source.visible - set(obs)
        if missing:
            raise ValidationError(
                f"observation missing visible units {sorted(missing)}")
        extra = set(obs) - source.visible
        if extra:
            raise ValidationError(f"observed units {sorted(extra)} not visible")
    else:
        params = source
        obs = {i: state_index(s) for i, s in (observation or {}).items()}
    for i in obs:
        if not 0 <= i < params.n:
            raise ValidationError(f"observed unit {i} outside 0..{params.n - 1}")
    return params, obs


def run(source, config: RunConfig, observation=None) -> Trajectory:
    """Run one engine on a model (or raw pairwise params) and record it.

    Deterministic in (config, observation): identical inputs give identical
    trajectories byte for byte.
    """
    params, obs = _resolve_run_observation(source, observation)
    n = params.n
    if config.steps * 2 * n > RECORD_CELL_CAP:
        raise CapacityError(
            f"recording {config.steps} steps x {2 * n} channels exceeds the "
            f"{RECORD_CELL_CAP}-cell guard")
    hidden = [i for i in range(n) if i not in obs]
    if not hidden:
        raise ValidationError("no hidden units to infer")
    Wm, bv = params.dense()
    k_window = (config.algorithm == "ssi"
                and config.kernel.family == EXPONENTIAL_NORMALIZED)
    weights = config.kernel.weights() if config.algorithm == "ssi" else None

    theta = _init_theta(config, n)
    for i, s in obs.items():
        theta[i] = (1.0 - s, float(s))

    y = None
    history = None
    if config.algorithm in ("gibbs", "ssi"):
        y = np.zeros(n, dtype=np.int8)
        init_draws = rng.uniform_block(config.seed, rng.STREAM_INIT_Y, n)
        for i in range(n):
            y[i] = obs[i] if i in obs else (0 if init_draws[i] < theta[i, 0] else 1)
        ind = np.stack([1.0 - y, y.astype(float)], axis=1)
        if config.algorithm == "gibbs" or k_window:
            theta = ind.copy()  # indicator warm start; alpha kernel keeps init
        if k_window:
            history = SpikeHistory(config.kernel.K, 2 * n)
            history.push_all(ind.reshape(-1))
            for i in obs:
                history.fill(2 * i, theta[i, 0])
                history.fill(2 * i + 1, theta[i, 1])

    phi = theta.copy()
    for i in hidden:
        phi[i] = proposal(params, theta, i)

    draws = DrawSource(config.seed, n)
    scan = None
    if config.schedule == SEQUENTIAL_RANDOM_SCAN:
        scan = rng.uniform_block(config.seed, rng.STREAM_SCAN, config.steps)

    theta0 = theta.copy()
    rec_theta = np.empty((config.steps, 2 * n))
    rec_phi = np.empty((config.steps, 2 * n))
    rec_x = np.full((config.steps, 2 * n), -1, dtype=np.int8)

    state = InferenceState(t=0, theta=theta, phi=phi, y=y, history=history)
    for t in range(config.steps):
        if config.schedule == PARALLEL:
            state = _parallel_step(params, Wm, bv, state, hidden, obs, config,
                                   weights, draws)
            if state.y is not None:
                for i in hidden:
                    rec_x[t, 2 * i + state.y[i]] = 1
                    rec_x[t, 2 * i + 1 - state.y[i]] = 0
        else:
            if config.schedule == SEQUENTIAL_CYCLIC:
                i = hidden[t % len(hidden)]
            else:
                i = hidden[int(scan[t] * len(hidden))]
            if config.algorithm == "gibbs":
                state = gibbs_step(params, state, i, draws)
            elif config.algorithm == "variational":
                state = variational_step(params, state, i)
            else:
                state = ssi_step(params, state, i, config.kernel, draws,
                                 deterministic=config.deterministic)
            if state.y is not None:
                rec_x[t, 2 * i + state.y[i]] = 1
                rec_x[t, 2 * i + 1 - state.y[i]] = 0
        for i in obs:
            rec_x[t, 2 * i + obs[i]] = 1
            rec_x[t, 2 * i + 1 - obs[i]] = 0
        rec_theta[t] = state.theta.reshape(-1)
        rec_phi[t] = state.phi.reshape(-1)

    clamped = np.zeros(2 * n, dtype=bool)
    for i in obs:
        clamped[2 * i] = clamped[2 * i + 1] = True
    return Trajectory(
        kind="model", algorithm=config.algorithm, schedule=config.schedule,
        seed=config.seed,
        channels=[(i, "AB"[u]) for i in range(n) for u in (0, 1)],
        theta=rec_theta, phi=rec_phi, x=rec_x, theta0=theta0.reshape(-1),
        source_id=params_fingerprint(params, obs), config=config.to_dict(),
        clamped=clamped)


def _parallel_step(params, Wm, bv, state, hidden, obs, config, weights,
                   draws) -> InferenceState:
    """Synchronized update of all hidden units from the t-1 snapshot."""
    flat = state.theta.reshape(-1)
    logits = Wm @ flat - bv
    phi_all = expit(logits).reshape(-1, 2)
    out = state.copy()
    for i in hidden:
        out.phi[i] = phi_all[i]
    if config.algorithm == "variational":
        for i in hidden:
            out.theta[i] = phi_all[i]
        out.t = state.t + 1
        return out

    totals = phi_all[:, 0] + phi_all[:, 1]
    p_a = np.where(totals > 0, phi_all[:, 0] / np.where(totals > 0, totals, 1.0), 0.5)
    if config.deterministic and config.algorithm == "ssi":
        x_a = p_a
        samples = (p_a < 0.5).astype(np.int8)
    else:
        r = draws.row(state.t)
        samples = (r >= p_a).astype(np.int8)
        x_a = 1.0 - samples
    for i in hidden:
        out.y[i] = samples[i]
    if config.algorithm == "gibbs":
        for i in hidden:
            out.theta[i, 0] = x_a[i]
            out.theta[i, 1] = 1.0 - x_a[i]
    elif config.kernel.family == DISCRETE_ALPHA:
        a = config.kernel.a
        for i in hidden:
            out.theta[i, 0] = (1.0 - a) * state.theta[i, 0] + a * x_a[i]
            out.theta[i, 1] = (1.0 - a) * state.theta[i, 1] + a * (1.0 - x_a[i])
    else:
        push = out.history.buf[0].copy()
        push[0::2] = x_a
        push[1::2] = 1.0 - x_a
        for i in obs:
            push[2 * i] = state.theta[i, 0]
            push[2 * i + 1] = state.theta[i, 1]
        out.history.push_all(push)
        traces = out.history.weighted_sum(weights)
        for i in hidden:
            out.theta[i, 0] = traces[2 * i]
            out.theta[i, 1] = traces[2 * i + 1]
    out.t = state.t + 1
    return out


# ---------------------------------------------------------------------------
# Network-space runner (event networks from the transforms module)


def run_network(net, config: RunConfig, clamp=None, groups=None) -> Trajectory:
    """Run variational or semi-stochastic inference on an event network.

    Each neuron is one independent channel: proposals are
    sigmoid(W @ theta + e) and samples are drawn per channel with no pair
    renormalization.  ``clamp`` maps neuron index -> forced activation.
    ``groups`` optionally partitions neurons for sequential schedules (one
    group per step); default is one neuron per group.
    """
    if config.algorithm == "gibbs":
        raise ConfigError("networks support 'variational' and 'ssi' only")
    n = net.n
    if config.steps * n > RECORD_CELL_CAP:
        raise CapacityError("recording would exceed the cell guard")
    clamp = {int(i): float(v) for i, v in (clamp or {}).items()}
    for i in clamp:
        if not 0 <= i < n:
            raise ValidationError(f"clamped neuron {i} outside 0..{n - 1}")
    free = [i for i in range(n) if i not in clamp]
    if not free:
        raise ValidationError("no free neurons to infer")
    if groups is None:
        groups = [[i] for i in free]
    else:
        groups = [[int(i) for i in g if int(i) in set(free)] for g in groups]
        groups = [g for g in groups if g]

    W = net.W
    e = net.e
    recursive = (config.algorithm == "ssi"
                 and config.kernel.family == DISCRETE_ALPHA)
    weights = config.kernel.weights() if config.algorithm == "ssi" else None

    if isinstance(config.init, str):
        if config.init == "constant_half":
            theta = np.full(n, 0.5)
        elif config.init == "uniform_random":
            theta = rng.uniform_grid(config.seed, rng.STREAM_INIT_THETA, n, 1)[:, 0]
        else:
            raise ConfigError(f"unknown init mode {config.init!r}")
    else:
        theta = np.asarray(config.init, dtype=float).reshape(-1).copy()
        if theta.shape != (n,):
            raise ConfigError(f"init vector length {theta.shape} != ({n},)")
    for i, v in clamp.items():
        theta[i] = v

    history = None
    x_state = None
    if config.algorithm == "ssi":
        x_state = np.zeros(n, dtype=np.int8)
        if recursive:
            pass  # theta itself is the trace; no seed sample needed
        else:
            init_draws = rng.uniform_block(config.seed, rng.STREAM_INIT_Y, n)
            x0 = (init_draws < theta).astype(np.int8)
            for i, v in clamp.items():
                x0[i] = int(round(v))
            history = SpikeHistory(config.kernel.K, n)
            history.push_all(x0.astype(float))
            theta = history.weighted_sum(weights)
            for i, v in clamp.items():
                history.fill(i, v)
                theta[i] = v
            x_state = x0

    phi = expit(W @ theta + e)
    for i, v in clamp.items():
        phi[i] = v

    draws = DrawSource(config.seed, n)
    scan = None
    if config.schedule == SEQUENTIAL_RANDOM_SCAN:
        scan = rng.uniform_block(config.seed, rng.STREAM_SCAN, config.steps)

    theta0 = theta.copy()
    rec_theta = np.empty((config.steps, n))
    rec_phi = np.empty((config.steps, n))
    rec_x = np.full((config.steps, n), -1, dtype=np.int8)

    for t in range(config.steps):
        if config.schedule == PARALLEL:
            active = free
        elif config.schedule == SEQUENTIAL_CYCLIC:
            active = groups[t % len(groups)]
        else:
            active = groups[int(scan[t] * len(groups))]
        logits = W[active] @ theta + e[active]
        phi_new = expit(logits)
        phi[active] = phi_new
        if config.algorithm == "variational":
            theta[active] = phi_new
        else:
            if config.deterministic:
                x_vals = phi_new
                x_state[active] = (phi_new >= 0.5).astype(np.int8)
            else:
                r = draws.row(t)[active]
                spikes = (r < phi_new).astype(np.int8)
                x_state[active] = spikes
                x_vals = spikes.astype(float)
            rec_x[t, active] = x_state[active]
            if recursive:
                a = config.kernel.a
                theta[active] = (1.0 - a) * theta[active] + a * x_vals
            else:
                for idx, i in enumerate(active):
                    history.push(i, x_vals[idx])
                traces = history.weighted_sum(weights)
                theta[active] = traces[active]
        for i, v in clamp.items():
            theta[i] = v
            if x_state is not None:
                rec_x[t, i] = int(round(v))
        rec_theta[t] = theta
        rec_phi[t] = phi

    clamped = np.zeros(n, dtype=bool)
    for i in clamp:
        clamped[i] = True
    return Trajectory(
        kind="network", algorithm=config.algorithm, schedule=config.schedule,
        seed=config.seed, channels=[(i, "-") for i in range(n)],
        theta=rec_theta, phi=rec_phi, x=rec_x, theta0=theta0,
        source_id=source_fingerprint({"net": net.to_dict(), "clamp": clamp}),
        config=config.to_dict(), clamped=clamped)


# ---------------------------------------------------------------------------
# Fast Gibbs marginal estimation (state-table chain for small models)


def gibbs_chain_marginals(source, observation=None, steps: int = 1_000_000,
                          seed: int = 0, burnin: int | None = None) -> dict:
    """Empirical posterior marginals from a long random-scan Gibbs chain.

    Replays exactly the chain that repeated :func:`gibbs_step` calls under
    ``sequential_random_scan`` would produce (same draw addressing), but
    through a precomputed state-transition table, so million-step chains on
    small models take seconds.  Returns hidden index -> (p_A, p_B).
    """
    params, obs = _resolve_run_observation(source, observation)
    n = params.n
    hidden = [i for i in range(n) if i not in obs]
    h = len(hidden)
    if h > TABLE_UNIT_CAP:
        raise CapacityError(
            f"state-table chain capped at {TABLE_UNIT_CAP} hidden units")
    if burnin is None:
        burnin = steps // 10
    if not 0 <= burnin < steps:
        raise ConfigError("burnin must lie in [0, steps)")

    # Hidden-state index: bit k = state of hidden[k].
    n_states = 1 << h
    theta = np.zeros((n, 2))
    for i, s in obs.items():
        theta[i] = (1.0 - s, float(s))
    p_a = np.empty((n_states, h))
    for s_idx in range(n_states):
        for k, i in enumerate(hidden):
            bit = (s_idx >> k) & 1
            theta[i] = (1.0 - bit, float(bit))
        for k, i in enumerate(hidden):
            phi = proposal(params, theta, i)
            total = phi[0] + phi[1]
            p_a[s_idx, k] = phi[0] / total if total > 0 else 0.5

    # Initial assignment: same draws as run().
    theta0 = _init_theta(RunConfig(algorithm="gibbs", steps=steps, seed=seed), n)
    init_draws = rng.uniform_block(seed, rng.STREAM_INIT_Y, n)
    state = 0
    for k, i in enumerate(hidden):
        bit = 0 if init_draws[i] < theta0[i, 0] else 1
        state |= bit << k
    scan = rng.uniform_block(seed, rng.STREAM_SCAN, steps)
    units = (scan * h).astype(np.int64)
    grid = rng.uniform_grid(seed, rng.STREAM_SPIKE, steps, n)
    flips = grid[np.arange(steps), np.asarray(hidden)[units]]

    p_tab = [[float(p_a[s, k]) for k in range(h)] for s in range(n_states)]
    units_l = units.tolist()
    flips_l = flips.tolist()
    counts = [0] * n_states
    for t in range(steps):
        k = units_l[t]
        bit = 0 if flips_l[t] < p_tab[state][k] else 1
        state = (state & ~(1 << k)) | (bit << k)
        if t >= burnin:
            counts[state] += 1

    total = steps - burnin
    out = {}
    for k, i in enumerate(hidden):
        ones = sum(c for s, c in enumerate(counts) if (s >> k) & 1)
        p_b = ones / total
        out[i] = (1.0 - p_b, p_b)
    return out


# ---------------------------------------------------------------------------
# Free energy and smoothing


def free_energy(bm: BoltzmannMachine, theta) -> float:
    """Variational objective E_q[energy] - H(q) for a factorized q.

    Equals KL(q || p) up to the constant log Z, so coordinate variational
    updates never increase it.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (bm.n, 2):
        theta = theta.reshape(bm.n, 2)
    if np.any(theta < 0) or np.any(theta > 1):
        raise ValidationError("activations outside [0, 1]")
    sums = theta.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValidationError("activation pairs must sum to 1")
    V4, c2 = dense_terms(bm)
    expected = -0.5 * np.einsum("iujv,iu,jv->", V4, theta, theta)
    expected += float((c2 * theta).sum())
    entropy = -float(xlogy(theta, theta).sum())
    return expected - entropy


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean; the first window-1 entries average what is available."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    series = np.asarray(series, dtype=float)
    cs = np.cumsum(series, axis=0)
    out = np.empty_like(series, dtype=float)
    t = np.arange(len(series))
    counts = np.minimum(t + 1, window).astype(float)
    shape = (-1,) + (1,) * (series.ndim - 1)
    head = cs
    tail = np.zeros_like(cs)
    if window < len(series):
        tail[window:] = cs[:-window]
    out = (head - tail) / counts.reshape(shape)
    return out
