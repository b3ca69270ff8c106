"""Two-state Boltzmann machines and exact small-scale inference oracles.

Units take one of two states, canonically encoded A -> 0 and B -> 1.  The
model is parameterized by a symmetric coupling tensor ``V`` over
(unit, state, unit, state) and per-(unit, state) biases ``c``; the
probability of a full assignment y is proportional to

    exp( 0.5 * sum_{i != j} V[i, y_i, j, y_j]  -  sum_i c[i, y_i] )

``energy`` returns the negated exponent, so p(y) ~ exp(-energy(y)).  Both
symmetric entries of every coupling must be stored; the 0.5 factor then
cancels the double count.

Inference algorithms never consume V directly; they use the differenced
parameterization (see :func:`derive_pairwise`):

    W[i, u, j, v] = V[i, u, j, v] - V[i, ~u, j, v]
    b[i, u]       = c[i, u] - c[i, ~u]

Enumeration oracles are exact but capped at 20 units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ValidationError

STATE_SYMBOLS = ("A", "B")
ENUMERATION_CAP = 20
DENSE_UNIT_CAP = 4096


def state_index(state) -> int:
    """Map a state symbol ('A'/'B') or index (0/1) to its index."""
    if state in (0, 1):
        return int(state)
    try:
        return STATE_SYMBOLS.index(state)
    except ValueError:
        raise ValidationError(f"unknown state {state!r}; expected 'A' or 'B'") from None


def other(u: int) -> int:
    """The complementary state index."""
    return 1 - u


@dataclass(frozen=True)
class BoltzmannMachine:
    """Immutable two-state Boltzmann machine.

    Attributes:
        n: unit count.
        V: sparse couplings, (i, u, j, v) -> value with i != j.  Symmetric:
            the (j, v, i, u) entry must be present with the same value.
        c: biases, (i, u) -> value.
        visible: indices of visible units.
        observed: default observation, visible index -> state index.  May be
            overridden per run.
        layers: optional layer structure metadata (tuples of unit indices),
            used by the reconstruction pipeline.
    """

    n: int
    V: dict = field(default_factory=dict)
    c: dict = field(default_factory=dict)
    visible: frozenset = field(default_factory=frozenset)
    observed: dict = field(default_factory=dict)
    layers: tuple = ()

    @classmethod
    def from_terms(cls, n, couplings=None, biases=None, visible=(),
                   observed=None, layers=()):
        """Build a model from one-sided coupling terms.

        Each coupling (i, u, j, v) -> value is mirrored into (j, v, i, u), so
        callers list every interaction once.  States may be symbols or 0/1.
        """
        V = {}
        for (i, u, j, v), val in (couplings or {}).items():
            u, v = state_index(u), state_index(v)
            V[(i, u, j, v)] = float(val)
            V[(j, v, i, u)] = float(val)
        c = {(i, state_index(u)): float(val)
             for (i, u), val in (biases or {}).items()}
        obs = {i: state_index(s) for i, s in (observed or {}).items()}
        bm = cls(n=n, V=V, c=c, visible=frozenset(visible), observed=obs,
                 layers=tuple(tuple(layer) for layer in layers))
        problems = validate(bm)
        if problems:
            raise ValidationError("; ".join(problems))
        return bm

    def hidden(self):
        """Hidden unit indices, sorted."""
        return [i for i in range(self.n) if i not in self.visible]


def validate(bm: BoltzmannMachine) -> list:
    """Check all structural invariants; return one message per violation."""
    problems = []
    if bm.n < 1:
        problems.append(f"unit count must be positive, got {bm.n}")
    for (i, u, j, v), val in bm.V.items():
        if i == j:
            problems.append(f"self-coupling stored at unit {i} (states {u},{v})")
            continue
        if not (0 <= i < bm.n and 0 <= j < bm.n) or u not in (0, 1) or v not in (0, 1):
            problems.append(f"coupling index out of range: ({i},{u},{j},{v})")
            continue
        if not np.isfinite(val):
            problems.append(f"non-finite coupling at ({i},{u},{j},{v})")
        mirror = bm.V.get((j, v, i, u))
        if mirror is None or mirror != val:
            problems.append(
                f"symmetry violation: V[{i},{u},{j},{v}]={val} but "
                f"V[{j},{v},{i},{u}]={mirror}")
    for (i, u), val in bm.c.items():
        if not (0 <= i < bm.n) or u not in (0, 1):
            problems.append(f"bias index out of range: ({i},{u})")
        elif not np.isfinite(val):
            problems.append(f"non-finite bias at ({i},{u})")
    for i in bm.visible:
        if not (0 <= i < bm.n):
            problems.append(f"visible index out of range: {i}")
    for i in bm.observed:
        if i not in bm.visible:
            problems.append(f"observed unit {i} is not visible")
    return problems


def _require_valid(bm: BoltzmannMachine):
    problems = validate(bm)
    if problems:
        raise ValidationError("; ".join(problems))


@dataclass(frozen=True)
class PairwiseParams:
    """Differenced event-space parameterization used by the inference engines.

    Attributes:
        n: unit count.
        W: (i, u, j, v) -> V[i,u,j,v] - V[i,~u,j,v]; zero entries dropped.
        b: (i, u) -> c[i,u] - c[i,~u]; zero entries dropped.
        blanket: i -> sorted tuple of units j with some nonzero W[i,.,j,.].
    """

    n: int
    W: dict
    b: dict
    blanket: dict

    def dense(self):
        """Dense (2n, 2n) weight matrix and (2n,) bias vector.

        Channel (i, u) maps to flat index 2*i + u.  Guarded so that an
        accidental huge model does not allocate quadratic memory.
        """
        if self.n > DENSE_UNIT_CAP:
            raise CapacityError(
                f"dense materialization capped at {DENSE_UNIT_CAP} units, got {self.n}")
        Wm = np.zeros((2 * self.n, 2 * self.n))
        bv = np.zeros(2 * self.n)
        for (i, u, j, v), val in self.W.items():
            Wm[2 * i + u, 2 * j + v] = val
        for (i, u), val in self.b.items():
            bv[2 * i + u] = val
        return Wm, bv


def derive_pairwise(bm: BoltzmannMachine) -> PairwiseParams:
    """Differenced weights, biases and Markov blankets of a valid model."""
    _require_valid(bm)
    W = {}
    keys = set(bm.V)
    keys.update((i, other(u), j, v) for (i, u, j, v) in bm.V)
    for (i, u, j, v) in keys:
        diff = bm.V.get((i, u, j, v), 0.0) - bm.V.get((i, other(u), j, v), 0.0)
        if diff != 0.0:
            W[(i, u, j, v)] = diff
    b = {}
    for i in range(bm.n):
        diff = bm.c.get((i, 0), 0.0) - bm.c.get((i, 1), 0.0)
        if diff != 0.0:
            b[(i, 0)] = diff
            b[(i, 1)] = -diff
    blanket = {i: set() for i in range(bm.n)}
    for (i, _, j, _) in W:
        blanket[i].add(j)
    return PairwiseParams(
        n=bm.n, W=W, b=b,
        blanket={i: tuple(sorted(js)) for i, js in blanket.items()})


def _as_state_vector(bm: BoltzmannMachine, y) -> np.ndarray:
    if len(y) != bm.n:
        raise ValidationError(
            f"assignment covers {len(y)} units, model has {bm.n}")
    return np.asarray([state_index(s) for s in y], dtype=np.int8)


def energy(bm: BoltzmannMachine, y) -> float:
    """Negated exponent of the joint; p(y) is proportional to exp(-energy)."""
    yv = _as_state_vector(bm, y)
    acc = 0.0
    for (i, u, j, v), val in bm.V.items():
        if yv[i] == u and yv[j] == v:
            acc += val
    e = -0.5 * acc
    for i in range(bm.n):
        e += bm.c.get((i, int(yv[i])), 0.0)
    return e


def dense_terms(bm: BoltzmannMachine):
    """Couplings as an (n,2,n,2) array and biases as (n,2)."""
    V4 = np.zeros((bm.n, 2, bm.n, 2))
    c2 = np.zeros((bm.n, 2))
    for (i, u, j, v), val in bm.V.items():
        V4[i, u, j, v] = val
    for (i, u), val in bm.c.items():
        c2[i, u] = val
    return V4, c2


def _batch_energies(V4, c2, assignments) -> np.ndarray:
    """Energies of an (m, n) int batch of assignments, vectorized."""
    m, n = assignments.shape
    rows = np.arange(m)
    acc = np.zeros(m)
    for i in range(n):
        vi = V4[i, assignments[:, i]]          # (m, n, 2)
        for j in range(n):
            acc += vi[rows, j, assignments[:, j]]
        acc -= 2.0 * c2[i, assignments[:, i]]  # fold biases into the 0.5 scale
    return -0.5 * acc


def all_assignments(n: int) -> np.ndarray:
    """All 2**n assignments as an (2**n, n) int8 array; bit i = unit i."""
    idx = np.arange(1 << n, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(n, dtype=np.uint32)) & 1).astype(np.int8)


@dataclass(frozen=True)
class JointTable:
    """Exact joint distribution over all assignments of a small model."""

    n: int
    probs: np.ndarray  # (2**n,), index bit i = state of unit i
    energies: np.ndarray

    def prob(self, y) -> float:
        idx = 0
        for i, s in enumerate(y):
            idx |= state_index(s) << i
        return float(self.probs[idx])


def exact_joint(bm: BoltzmannMachine) -> JointTable:
    """Enumerate the joint distribution; capped at 20 units."""
    _require_valid(bm)
    if bm.n > ENUMERATION_CAP:
        raise CapacityError(
            f"exact enumeration capped at {ENUMERATION_CAP} units, got {bm.n}")
    V4, c2 = dense_terms(bm)
    assigns = all_assignments(bm.n)
    energies = np.empty(len(assigns))
    chunk = 1 << 14
    for lo in range(0, len(assigns), chunk):
        batch = assigns[lo:lo + chunk].astype(np.intp)
        energies[lo:lo + len(batch)] = _batch_energies(V4, c2, batch)
    logp = -energies
    logp -= logp.max()
    probs = np.exp(logp)
    probs /= probs.sum()
    return JointTable(n=bm.n, probs=probs, energies=energies)


def _resolve_observation(bm: BoltzmannMachine, observation) -> dict:
    obs = bm.observed if observation is None else {
        i: state_index(s) for i, s in observation.items()}
    for i in obs:
        if i not in bm.visible:
            raise ValidationError(f"observed unit {i} is not visible")
    missing = bm.visible - set(obs)
    if missing:
        raise ValidationError(
            f"observation missing visible units {sorted(missing)}")
    return obs


def exact_posterior_marginals(bm: BoltzmannMachine, observation=None) -> dict:
    """Posterior marginals of every hidden unit by clamped enumeration.

    Returns hidden index -> (p_A, p_B).  The observation must cover all
    visible units; ``None`` falls back to the model's default observation.
    """
    _require_valid(bm)
    obs = _resolve_observation(bm, observation)
    hidden = bm.hidden()
    h = len(hidden)
    if bm.n > ENUMERATION_CAP:
        raise CapacityError(
            f"exact enumeration capped at {ENUMERATION_CAP} units, got {bm.n}")
    V4, c2 = dense_terms(bm)
    hidden_assigns = all_assignments(h)
    full = np.zeros((1 << h, bm.n), dtype=np.intp)
    for i, s in obs.items():
        full[:, i] = s
    if h:
        full[:, hidden] = hidden_assigns
    energies = np.empty(len(full))
    chunk = 1 << 14
    for lo in range(0, len(full), chunk):
        batch = full[lo:lo + chunk]
        energies[lo:lo + len(batch)] = _batch_energies(V4, c2, batch)
    logp = -energies
    logp -= logp.max()
    probs = np.exp(logp)
    probs /= probs.sum()
    out = {}
    for k, i in enumerate(hidden):
        p_b = float(probs[hidden_assigns[:, k] == 1].sum())
        out[i] = (1.0 - p_b, p_b)
    return out


# ---------------------------------------------------------------------------
# Model files


def model_to_dict(bm: BoltzmannMachine) -> dict:
    doc = {
        "n": bm.n,
        "visible": sorted(bm.visible),
        "V": [{"i": i, "u": STATE_SYMBOLS[u], "j": j, "v": STATE_SYMBOLS[v],
               "value": val}
              for (i, u, j, v), val in sorted(bm.V.items())],
        "c": [{"i": i, "u": STATE_SYMBOLS[u], "value": val}
              for (i, u), val in sorted(bm.c.items())],
    }
    if bm.observed:
        doc["observed"] = {str(i): STATE_SYMBOLS[s] for i, s in sorted(bm.observed.items())}
    if bm.layers:
        doc["layers"] = [list(layer) for layer in bm.layers]
    return doc


def model_from_dict(doc: dict) -> BoltzmannMachine:
    """Parse and validate a model document; rejects duplicate entries."""
    try:
        n = int(doc["n"])
        V = {}
        for item in doc.get("V", []):
            key = (int(item["i"]), state_index(item["u"]),
                   int(item["j"]), state_index(item["v"]))
            if key in V:
                raise ValidationError(f"duplicate coupling entry {key}")
            V[key] = float(item["value"])
        c = {}
        for item in doc.get("c", []):
            key = (int(item["i"]), state_index(item["u"]))
            if key in c:
                raise ValidationError(f"duplicate bias entry {key}")
            c[key] = float(item["value"])
        visible = frozenset(int(i) for i in doc.get("visible", []))
        observed = {int(i): state_index(s)
                    for i, s in doc.get("observed", {}).items()}
        layers = tuple(tuple(int(i) for i in layer)
                       for layer in doc.get("layers", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from exc
    bm = BoltzmannMachine(n=n, V=V, c=c, visible=visible, observed=observed,
                          layers=layers)
    problems = validate(bm)
    if problems:
        raise ValidationError("; ".join(problems))
    return bm


def load_model(path) -> BoltzmannMachine:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(bm: BoltzmannMachine, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(bm), fh, indent=2, sort_keys=True)
        fh.write("\n")
