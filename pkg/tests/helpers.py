"""Shared builders for the test suite."""

import numpy as np

from spikebm.model import BoltzmannMachine, derive_pairwise
from spikebm.transforms import LnpNetwork


def strong_two_neuron_net(a=0.5, eps_step=1.0) -> LnpNetwork:
    """The two-neuron network with one near-vertex and one near-origin
    fixed point used throughout the stability experiments."""
    return LnpNetwork(n=2, W=np.array([[0.0, 20.0], [15.0, 0.0]]),
                      e=np.array([-15.0, -10.0]), a=a, eps_step=eps_step)


STRONG_FP_HIGH = np.array([0.9922, 0.9925])
STRONG_FP_LOW = np.array([0.0031e-4, 0.4540e-4])


def random_model(seed, n, scale=0.5, n_visible=0, bias_scale=None,
                 observe=True) -> BoltzmannMachine:
    """Random symmetric model with optional observed visible units."""
    g = np.random.default_rng(seed)
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            for u in "AB":
                for v in "AB":
                    couplings[(i, u, j, v)] = g.normal() * scale
    bias_scale = scale if bias_scale is None else bias_scale
    biases = {(i, "A"): g.normal() * bias_scale for i in range(n)}
    visible = list(range(n_visible))
    observed = ({i: "AB"[g.integers(2)] for i in visible} if observe else {})
    return BoltzmannMachine.from_terms(n, couplings=couplings, biases=biases,
                                       visible=visible, observed=observed)


def weak_model(seed, n, w_inf=2.0, n_visible=0) -> BoltzmannMachine:
    """Random model rescaled so the dense weight matrix has ||W||_inf <= w_inf."""
    bm = random_model(seed, n, scale=1.0, n_visible=n_visible)
    params = derive_pairwise(bm)
    Wm, _ = params.dense()
    norm = np.abs(Wm).sum(axis=1).max()
    factor = 0.9 * w_inf / norm
    scaled = {k: v * factor for k, v in bm.V.items()}
    biases = {k: v * factor for k, v in bm.c.items()}
    return BoltzmannMachine(n=bm.n, V=scaled, c=biases, visible=bm.visible,
                            observed=bm.observed)
