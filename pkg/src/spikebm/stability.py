"""Fixed-point analysis and stochastic-stability experiments.

The deterministic counterpart of the spiking network moves every trace a
fraction a*eps of the way toward its rate:

    y' = (1 - a*eps) * y + a*eps * sigmoid(W @ y + e)

Fixed points solve y = sigmoid(W @ y + e); they are located by multi-start
forward iteration (the network's own dynamics) plus a damped Newton pass
that also captures unstable points, then verified by direct substitution.
Stability is classified through the Jacobian of the deterministic map.

Ensembles run many seeded spiking trials in lock step and report basin
membership, escape times and ball occupancy around each fixed point, which
is how the qualitative claims about strong and weak attractors are made
testable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import rng
from .errors import ConfigError, ValidationError
from .lnp import rate, simulate_batch
from .transforms import LnpNetwork

_MULTISTART_SEED = 0x5EEDF1CED  # internal: keeps the finder deterministic


def deterministic_step(net: LnpNetwork, y) -> np.ndarray:
    """Expectation dynamics; at a*eps = 1 this is plain forward evaluation."""
    y = np.asarray(y, dtype=float)
    ae = net.a * net.eps_step
    return (1.0 - ae) * y + ae * rate(net, y)


def jacobian(net: LnpNetwork, y) -> np.ndarray:
    """Jacobian of the deterministic map at y."""
    lam = rate(net, y)
    ae = net.a * net.eps_step
    return (1.0 - ae) * np.eye(net.n) + ae * (lam * (1.0 - lam))[:, None] * net.W


@dataclass(frozen=True)
class FixedPoint:
    y: np.ndarray
    residual: float
    classification: str        # "stable" | "unstable"
    spectral_radius: float

    def to_dict(self) -> dict:
        return {"y": self.y.tolist(), "residual": self.residual,
                "class": self.classification,
                "spectral_radius": self.spectral_radius}


@dataclass
class FixedPointReport:
    points: list
    seeds_used: int
    diagnostics: list = field(default_factory=list)

    def nearest(self, y) -> FixedPoint:
        y = np.asarray(y, dtype=float)
        if not self.points:
            raise ValidationError("report holds no fixed points")
        return min(self.points, key=lambda p: float(np.max(np.abs(p.y - y))))

    def to_dict(self) -> dict:
        return {"points": [p.to_dict() for p in self.points],
                "seeds_used": self.seeds_used, "diagnostics": self.diagnostics}


def classify(net: LnpNetwork, y_star) -> tuple:
    """(classification, spectral_radius) of a verified fixed point."""
    y_star = np.asarray(y_star, dtype=float)
    residual = float(np.max(np.abs(y_star - rate(net, y_star))))
    if residual > 1e-6:
        raise ValidationError(
            f"not a fixed point: substitution residual {residual:.3e}")
    radius = float(np.max(np.abs(np.linalg.eigvals(jacobian(net, y_star)))))
    return ("stable" if radius < 1.0 else "unstable"), radius


def _seed_points(net: LnpNetwork, grid_density: int) -> np.ndarray:
    if net.n <= 6:
        axes = [np.linspace(0.0, 1.0, grid_density)] * net.n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    return rng.uniform_grid(_MULTISTART_SEED, rng.STREAM_TRIAL_START,
                            1000, net.n)


def _newton_refine(net: LnpNetwork, y0: np.ndarray, tol: float,
                   iters: int = 200) -> np.ndarray | None:
    """Damped Newton on F(y) = y - sigmoid(W y + e), clipped to the cube."""
    y = y0.copy()
    for _ in range(iters):
        lam = rate(net, y)
        f = y - lam
        if np.max(np.abs(f)) < tol:
            return y
        J = np.eye(net.n) - (lam * (1.0 - lam))[:, None] * net.W
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        base = np.max(np.abs(f))
        for _ in range(30):
            cand = np.clip(y - scale * step, 0.0, 1.0)
            if np.max(np.abs(cand - rate(net, cand))) < base:
                y = cand
                break
            scale *= 0.5
        else:
            return None
    return y if np.max(np.abs(y - rate(net, y))) < tol else None


def find_fixed_points(net: LnpNetwork, grid_density: int = 8,
                      tol: float = 1e-10, max_iters: int = 100_000,
                      residual_tol: float = 1e-8,
                      dedup_radius: float = 1e-4) -> FixedPointReport:
    """Locate fixed points by multi-start iteration plus Newton refinement."""
    if grid_density < 2:
        raise ConfigError("grid density must be >= 2 per dimension")
    seeds = _seed_points(net, grid_density)
    diagnostics = []

    ys = seeds.copy()
    ae = net.a * net.eps_step
    active = np.ones(len(ys), dtype=bool)
    for _ in range(max_iters):
        if not active.any():
            break
        lam = expit(ys[active] @ net.W.T + net.e)
        nxt = (1.0 - ae) * ys[active] + ae * lam
        moved = np.max(np.abs(nxt - ys[active]), axis=1)
        ys[active] = nxt
        still = moved >= tol
        idx = np.nonzero(active)[0]
        active[idx[~still]] = False

    candidates = [y for y, act in zip(ys, active) if not act]
    if active.any():
        diagnostics.append(f"{int(active.sum())} seeds did not converge "
                           f"within {max_iters} iterations")
    for seed_y in seeds:
        refined = _newton_refine(net, seed_y, tol=max(tol, 1e-12))
        if refined is not None:
            candidates.append(refined)

    points = []
    for y in candidates:
        residual = float(np.max(np.abs(y - rate(net, y))))
        if residual > residual_tol:
            continue
        if any(np.linalg.norm(y - p.y) <= dedup_radius for p in points):
            continue
        classification, radius = classify(net, y)
        points.append(FixedPoint(y=y.copy(), residual=residual,
                                 classification=classification,
                                 spectral_radius=radius))
    points.sort(key=lambda p: tuple(np.round(p.y, 12)))
    if not points:
        diagnostics.append("no seed converged to a verified fixed point")
    return FixedPointReport(points=points, seeds_used=len(seeds),
                            diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Stochastic ensembles


@dataclass
class EnsembleStats:
    """Seeded trial statistics around known fixed points.

    ``escape_times`` holds, per fixed point, the first step at which each
    trial that visited the ball left it again (NaN if it never entered or
    never left).  ``basin_counts`` counts trials whose terminal-window mean
    lies inside the ball; trials near no point are unresolved.
    """

    trials: int
    steps: int
    radius: float
    terminal_window: int
    fixed_points: list
    basin_counts: dict
    escape_times: dict
    occupancy: dict
    terminal_means: np.ndarray
    classes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        fps = []
        for k, p in enumerate(self.fixed_points):
            esc = self.escape_times[k]
            esc = esc[~np.isnan(esc)]
            quantiles = ({q: float(np.quantile(esc, q)) for q in (0.1, 0.5, 0.9)}
                         if len(esc) else {})
            fps.append({"y": np.asarray(p).tolist(),
                        "class": self.classes[k] if self.classes else None,
                        "basin_count": self.basin_counts[k],
                        "radius_occupancy": self.occupancy[k],
                        "escaped": int(len(esc)),
                        "escape_quantiles": quantiles})
        return {"trials": self.trials, "steps": self.steps,
                "radius": self.radius,
                "terminal_window": self.terminal_window,
                "fixed_points": fps}


def ensemble(net: LnpNetwork, fixed_points, trials: int, steps: int,
             seed: int, radius: float = 0.05, terminal_window: int = 100,
             y0=None) -> EnsembleStats:
    """Run ``trials`` seeded spiking trajectories and score them against the
    given fixed points.  ``y0`` is a single start used by every trial;
    ``None`` draws per-trial uniform starts."""
    if trials < 1 or steps < 1:
        raise ConfigError("trials and steps must be >= 1")
    if not 0 < terminal_window <= steps:
        raise ConfigError("terminal window must lie in [1, steps]")
    fps = [np.asarray(p.y if isinstance(p, FixedPoint) else p, dtype=float)
           for p in fixed_points]
    classes = [p.classification if isinstance(p, FixedPoint) else None
               for p in fixed_points]
    if y0 is None:
        starts = rng.uniform_grid(seed, rng.STREAM_TRIAL_START, trials, net.n)
    else:
        starts = np.tile(np.asarray(y0, dtype=float), (trials, 1))
    traces, _ = simulate_batch(net, trials, steps, seed, starts)

    terminal_means = traces[:, steps - terminal_window:].mean(axis=1)
    basin_counts = {}
    escape_times = {}
    occupancy = {}
    for k, fp in enumerate(fps):
        dist = np.max(np.abs(traces - fp), axis=2)      # (trials, steps)
        inside = dist <= radius
        occupancy[k] = float(inside.mean())
        basin_counts[k] = int(
            (np.max(np.abs(terminal_means - fp), axis=1) <= radius).sum())
        # include the start position as step 0 so a trial seeded inside the
        # ball that leaves immediately still registers an exit
        start_inside = np.max(np.abs(starts - fp), axis=1) <= radius
        full = np.concatenate([start_inside[:, None], inside], axis=1)
        esc = np.full(trials, np.nan)
        for trial in range(trials):
            row = full[trial]
            entries = np.nonzero(row)[0]
            if len(entries) == 0:
                continue
            first_in = entries[0]
            exits = np.nonzero(~row[first_in:])[0]
            if len(exits):
                esc[trial] = first_in + exits[0]  # step index of first exit
        escape_times[k] = esc
    return EnsembleStats(trials=trials, steps=steps, radius=radius,
                         terminal_window=terminal_window, fixed_points=fps,
                         basin_counts=basin_counts, escape_times=escape_times,
                         occupancy=occupancy, terminal_means=terminal_means,
                         classes=classes)


def excluded_region_check(a: float, traces) -> list:
    """Violations of the reachability invariant y in [0, 1-a] U [a, 1].

    Valid for a > 0.5 at unit time step; traces are rows from step 1 on.
    The invariant is exact, so any violation is a bug, not noise.
    """
    if a <= 0.5:
        raise ConfigError("the excluded region is empty for a <= 0.5")
    traces = np.atleast_2d(np.asarray(traces, dtype=float))
    bad = (traces > 1.0 - a) & (traces < a)
    out = []
    for t, i in zip(*np.nonzero(bad)):
        out.append((int(t), int(i), float(traces[t, i])))
    return out


def field_export(net: LnpNetwork, grid_resolution: int):
    """Residual field on a uniform [0,1]^2 grid for two-neuron networks.

    Returns an array of rows (y1, y2, sqnorm, v1, v2) where v = -(y - rate)
    and sqnorm = ||y - rate||^2; row order is y1-major.
    """
    if net.n != 2:
        raise ValidationError("field export requires a two-neuron network")
    if grid_resolution < 2:
        raise ConfigError("grid resolution must be >= 2")
    axis = np.linspace(0.0, 1.0, grid_resolution)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    ys = np.stack([g1.ravel(), g2.ravel()], axis=1)
    lam = expit(ys @ net.W.T + net.e)
    v = -(ys - lam)
    sqnorm = (v ** 2).sum(axis=1)
    return np.column_stack([ys, sqnorm, v])


def rate_envelope(net: LnpNetwork) -> tuple:
    """Interval containing every reachable rate, from norm bounds alone."""
    bound = float(np.max(np.abs(net.W).sum(axis=1)) + np.max(np.abs(net.e)))
    return float(expit(-bound)), float(expit(bound))
