"""Network rewrites: bias absorption, event split and sign (Dale) split.

Each rewrite is a pure function returning a new object plus a
:class:`TransformRecord` mapping old indices to new ones.  Records chain:
applying them in order and reading trajectories back through
:func:`readback` recovers series in the original coordinates together with
the two residual diagnostics (event-pair sum minus one, excitatory copy
minus inhibitory copy).

The weight-shift identity used for bias absorption adds the same constant
to a unit's bias and to both incoming entries from one neighbour; because a
neighbour's two activation channels sum to one, proposals are unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ValidationError
from .model import PairwiseParams

EVENT_A = "event_A"
EVENT_B = "event_B"
EXCITATORY = "excitatory_copy"
INHIBITORY = "inhibitory_copy"
IDENTITY = "identity"


@dataclass(frozen=True)
class LnpNetwork:
    """Neuron-level network: rate = sigmoid(W @ y + e), trace constant a.

    Row i of W holds the incoming weights of neuron i.  ``sign`` optionally
    tags each neuron's outgoing sign (+1 excitatory, -1 inhibitory, 0 no
    outgoing synapses) and is validated against the columns of W.
    """

    n: int
    W: np.ndarray
    e: np.ndarray
    a: float = 0.5
    eps_step: float = 1.0
    sign: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))
        object.__setattr__(self, "e", np.asarray(self.e, dtype=float))
        if self.W.shape != (self.n, self.n):
            raise ValidationError(f"W shape {self.W.shape} != ({self.n},{self.n})")
        if self.e.shape != (self.n,):
            raise ValidationError(f"e shape {self.e.shape} != ({self.n},)")
        if not np.all(np.isfinite(self.W)) or not np.all(np.isfinite(self.e)):
            raise ValidationError("non-finite network parameter")
        ae = self.a * self.eps_step
        if not 0 < ae <= 1:
            raise ValidationError(f"a*eps_step must lie in (0, 1], got {ae}")
        if self.sign is not None:
            object.__setattr__(self, "sign", np.asarray(self.sign, dtype=int))
            if self.sign.shape != (self.n,):
                raise ValidationError("sign tag length mismatch")
            for j in range(self.n):
                col = self.W[:, j]
                if self.sign[j] >= 0 and np.any(col < 0):
                    raise ValidationError(f"neuron {j} tagged >=0 has negative outgoing weight")
                if self.sign[j] <= 0 and np.any(col > 0):
                    raise ValidationError(f"neuron {j} tagged <=0 has positive outgoing weight")

    def to_dict(self) -> dict:
        doc = {"n": self.n, "W": self.W.tolist(), "e": self.e.tolist(),
               "a": self.a, "eps_step": self.eps_step}
        if self.sign is not None:
            doc["sign"] = self.sign.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "LnpNetwork":
        try:
            n = int(doc["n"])
            raw_w = doc["W"]
            if raw_w and isinstance(raw_w[0], dict):  # sparse triplets
                W = np.zeros((n, n))
                for item in raw_w:
                    W[int(item["i"]), int(item["j"])] = float(item["value"])
            else:
                W = np.asarray(raw_w, dtype=float)

            return cls(n=n, W=W, e=np.asarray(doc["e"], dtype=float),
                       a=float(doc.get("a", 0.5)),
                       eps_step=float(doc.get("eps_step", 1.0)),
                       sign=doc.get("sign"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed network document: {exc}") from exc


def load_network(path) -> LnpNetwork:
    with open(path) as fh:
        return LnpNetwork.from_dict(json.load(fh))


def save_network(net: LnpNetwork, path):
    with open(path, "w") as fh:
        json.dump(net.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class TransformRecord:
    """Index mapping of one rewrite: old index -> new indices and back."""

    kind: str
    forward: dict = field(default_factory=dict)   # old -> tuple of new
    inverse: dict = field(default_factory=dict)   # new -> (old, role)

    def __post_init__(self):
        seen = set()
        for old, news in self.forward.items():
            for new in news:
                if new in seen:
                    raise ValidationError(f"new index {new} mapped twice")
                seen.add(new)
                if new not in self.inverse or self.inverse[new][0] != old:
                    raise ValidationError(
                        f"forward/inverse disagree at new index {new}")
        if seen != set(self.inverse):
            raise ValidationError("inverse covers different indices than forward")

    @property
    def n_old(self) -> int:
        return len(self.forward)

    @property
    def n_new(self) -> int:
        return len(self.inverse)

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "forward": {str(k): list(v) for k, v in sorted(self.forward.items())},
                "inverse": {str(k): [v[0], v[1]] for k, v in sorted(self.inverse.items())}}

    @classmethod
    def from_dict(cls, doc: dict) -> "TransformRecord":
        return cls(kind=doc["kind"],
                   forward={int(k): tuple(v) for k, v in doc["forward"].items()},
                   inverse={int(k): (int(v[0]), v[1])
                            for k, v in doc["inverse"].items()})


def identity_record(n: int, kind: str = IDENTITY) -> TransformRecord:
    return TransformRecord(
        kind=kind, forward={i: (i,) for i in range(n)},
        inverse={i: (i, IDENTITY) for i in range(n)})


# ---------------------------------------------------------------------------
# Parameter-space rewrites


def shift(params: PairwiseParams, i: int, j: int, u: int, C: float) -> PairwiseParams:
    """Add C to b[i,u] and to both W[i,u,j,.] entries; proposals invariant."""
    if j not in params.blanket.get(i, ()):
        raise ValidationError(f"unit {j} is not in the blanket of unit {i}")
    W = dict(params.W)
    b = dict(params.b)
    for v in (0, 1):
        key = (i, u, j, v)
        val = W.get(key, 0.0) + C
        if val == 0.0:
            W.pop(key, None)
        else:
            W[key] = val
    bkey = (i, u)
    bval = b.get(bkey, 0.0) + C
    if bval == 0.0:
        b.pop(bkey, None)
    else:
        b[bkey] = bval
    blanket = {i_: set() for i_ in range(params.n)}
    for (i_, _, j_, _) in W:
        blanket[i_].add(j_)
    return PairwiseParams(n=params.n, W=W, b=b,
                          blanket={k: tuple(sorted(v)) for k, v in blanket.items()})


def remove_biases(params: PairwiseParams):
    """Absorb every bias into the blanket weights via repeated shifts.

    Each nonzero b[i,u] is spread as -b[i,u]/|M(i)| over the unit's blanket;
    the residual bias (accumulated rounding) is then zeroed exactly.
    """
    out = params
    for i in range(params.n):
        for u in (0, 1):
            bval = out.b.get((i, u), 0.0)
            if bval == 0.0:
                continue
            blanket = out.blanket.get(i, ())
            if not blanket:
                raise ValidationError(
                    f"unit {i} has bias but an empty blanket; nothing can absorb it")
            C = -bval / len(blanket)
            for j in blanket:
                out = shift(out, i, j, u, C)
    if out.b:
        residual = {k: v for k, v in out.b.items() if abs(v) > 1e-9}
        if residual:
            raise ValidationError(f"bias removal left residuals {residual}")
        out = replace(out, b={})
    return out, identity_record(params.n, kind="bias_removal")


def event_split(params: PairwiseParams, a: float = 0.5, eps_step: float = 1.0,
                carry_bias: bool = False):
    """One neuron per (unit, state) channel; weights copied entrywise.

    Requires zero biases unless ``carry_bias`` routes them into the external
    input vector (e[2i+u] = -b[i,u]).  Neuron 2i+u receives W[i,u,j,v] from
    neuron 2j+v.
    """
    if params.b and not carry_bias:
        raise ValidationError(
            "event split requires zero biases; call remove_biases first or "
            "pass carry_bias=True")
    m = 2 * params.n
    W = np.zeros((m, m))
    for (i, u, j, v), val in params.W.items():
        W[2 * i + u, 2 * j + v] = val
    e = np.zeros(m)
    if carry_bias:
        for (i, u), val in params.b.items():
            e[2 * i + u] = -val
    record = TransformRecord(
        kind="event_split",
        forward={i: (2 * i, 2 * i + 1) for i in range(params.n)},
        inverse={**{2 * i: (i, EVENT_A) for i in range(params.n)},
                 **{2 * i + 1: (i, EVENT_B) for i in range(params.n)}})
    return LnpNetwork(n=m, W=W, e=e, a=a, eps_step=eps_step), record


def dale_split(net: LnpNetwork):
    """Duplicate mixed-sign neurons into excitatory and inhibitory copies.

    Copies share the original incoming row; outgoing columns are partitioned
    by sign.  Single-signed neurons are kept as-is.
    """
    roles = []  # (old index, role)
    forward = {}
    for j in range(net.n):
        col = net.W[:, j]
        if np.any(col > 0) and np.any(col < 0):
            forward[j] = (len(roles), len(roles) + 1)
            roles.append((j, EXCITATORY))
            roles.append((j, INHIBITORY))
        else:
            forward[j] = (len(roles),)
            roles.append((j, IDENTITY))
    m = len(roles)
    W = np.zeros((m, m))
    sign = np.zeros(m, dtype=int)
    for q, (old_q, role_q) in enumerate(roles):
        col = net.W[:, old_q]
        if role_q == EXCITATORY:
            col = np.where(col > 0, col, 0.0)
        elif role_q == INHIBITORY:
            col = np.where(col < 0, col, 0.0)
        for p, (old_p, _) in enumerate(roles):
            W[p, q] = col[old_p]
        if np.any(col > 0):
            sign[q] = 1
        elif np.any(col < 0):
            sign[q] = -1
    e = np.array([net.e[old] for old, _ in roles])
    record = TransformRecord(
        kind="dale_split", forward=forward,
        inverse={new: roles[new] for new in range(m)})
    out = LnpNetwork(n=m, W=W, e=e, a=net.a, eps_step=net.eps_step, sign=sign)
    return out, record


# ---------------------------------------------------------------------------
# Readback


@dataclass
class ReadbackResult:
    """Trajectory series mapped back into original coordinates.

    ``pair_residual`` holds theta_A + theta_B - 1 per split unit (present
    when the chain contains an event split); ``dale_residual`` holds
    excitatory - inhibitory per duplicated neuron.
    """

    theta: np.ndarray
    phi: np.ndarray
    x: np.ndarray | None
    channels: list
    pair_residual: np.ndarray | None = None
    pair_units: list = field(default_factory=list)
    dale_residual: np.ndarray | None = None
    dale_units: list = field(default_factory=list)


def _invert_one(theta, phi, record):
    """Map series (T, n_new) back to (T, n_old); return residual info."""
    n_old = record.n_old
    t_out = np.empty((theta.shape[0], n_old))
    p_out = np.empty((phi.shape[0], n_old))
    dale_units, dale_res = [], []
    for old in sorted(record.forward):
        news = record.forward[old]
        if len(news) == 1:
            t_out[:, old] = theta[:, news[0]]
            p_out[:, old] = phi[:, news[0]]
        else:
            roles = {record.inverse[new][1]: new for new in news}
            if EXCITATORY in roles:
                exc, inh = roles[EXCITATORY], roles[INHIBITORY]
                t_out[:, old] = 0.5 * (theta[:, exc] + theta[:, inh])
                p_out[:, old] = 0.5 * (phi[:, exc] + phi[:, inh])
                dale_units.append(old)
                dale_res.append(theta[:, exc] - theta[:, inh])
            else:
                raise ValidationError(
                    f"cannot invert multi-index mapping of kind {record.kind}")
    res = np.stack(dale_res, axis=1) if dale_res else None
    return t_out, p_out, dale_units, res


def readback(trajectory, records):
    """Map a transformed-network trajectory back through a record chain.

    ``records`` may be one record or the list applied in forward order; the
    last record's output space must match the trajectory's channels.  Event
    splits are undone by reading the pair as (theta_A, theta_B); Dale copies
    are averaged.
    """
    if not isinstance(records, (list, tuple)):
        records = [records]
    theta = trajectory.theta
    phi = trajectory.phi
    if records:
        last = records[-1]
        widths = {last.n_new}
        if last.kind in ("bias_removal", IDENTITY):
            widths.add(2 * last.n_new)  # unit-space identity over channel pairs
        if theta.shape[1] not in widths:
            raise ValidationError(
                f"record expects {last.n_new} channels, trajectory has "
                f"{theta.shape[1]}")
    pair_residual = None
    pair_units = []
    dale_residual = None
    dale_units = []
    channels = list(trajectory.channels)
    for record in reversed(records):
        if record.kind == "dale_split":
            theta, phi, dale_units, dale_residual = _invert_one(theta, phi, record)
            channels = [(old, "-") for old in sorted(record.forward)]
        elif record.kind == "event_split":
            if record.n_new != theta.shape[1]:
                raise ValidationError("event record does not match series width")
            n_units = record.n_old
            pair_units = list(range(n_units))
            pair_residual = np.empty((theta.shape[0], n_units))
            for i in range(n_units):
                a_idx, b_idx = record.forward[i]
                pair_residual[:, i] = theta[:, a_idx] + theta[:, b_idx] - 1.0
            # channel layout (i,A),(i,B) is already the model layout
            channels = [(i, "AB"[u]) for i in range(n_units) for u in (0, 1)]
        elif record.kind in ("bias_removal", IDENTITY):
            if record.n_new != theta.shape[1] and record.n_new * 2 != theta.shape[1]:
                raise ValidationError("identity record does not match series width")
        else:
            raise ValidationError(f"unknown record kind {record.kind!r}")
    x = trajectory.x if theta.shape[1] == trajectory.x.shape[1] else None
    return ReadbackResult(theta=theta, phi=phi, x=x, channels=channels,
                          pair_residual=pair_residual, pair_units=pair_units,
                          dale_residual=dale_residual, dale_units=dale_units)
