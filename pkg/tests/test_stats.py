"""Trajectory summaries, scatter pairing, std shape and split residuals."""

import numpy as np
import pytest

from helpers import random_model, strong_two_neuron_net, weak_model
from spikebm.errors import ConfigError, ValidationError
from spikebm.inference import RunConfig, run, run_network
from spikebm.kernels import KernelSpec
from spikebm.lnp import simulate
from spikebm.model import derive_pairwise
from spikebm.stats import (combined_std_vs_mean, histogram,
                           scatter_mean_vs_var, split_residuals, std_vs_mean,
                           summarize)
from spikebm.transforms import dale_split, event_split, readback, remove_biases


def _gibbs_run(bm, steps=10_000, seed=1):
    return run(bm, RunConfig(algorithm="gibbs",
                             schedule="parallel_synchronized",
                             steps=steps, seed=seed))


class TestSummarize:
    def test_constant_trajectory(self):
        bm = random_model(3, n=2, scale=0.0, bias_scale=0.0, n_visible=1)
        traj = run(bm, RunConfig(algorithm="variational", steps=50, seed=0,
                                 init="constant_half"))
        s = summarize(traj, window=10, terminal_window=10)
        clamped = traj.clamped
        np.testing.assert_allclose(s.std[~clamped], 0.0, atol=1e-12)
        np.testing.assert_allclose(s.mean[~clamped], 0.5, atol=1e-12)

    def test_iid_bernoulli_moments(self):
        bm = random_model(3, n=1, scale=0.0, bias_scale=0.0)
        traj = _gibbs_run(bm, steps=10_000)
        s = summarize(traj, window=30, terminal_window=50)
        assert abs(s.mean[0] - 0.5) <= 3 * np.sqrt(0.25 / 10_000)
        assert abs(s.std[0] - 0.5) <= 0.02

    def test_smoothing_reduces_std(self):
        bm = random_model(5, n=3, scale=0.5)
        cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                        steps=5000, seed=2, kernel=KernelSpec(decay=0.5, K=30))
        traj = run(bm, cfg)
        theta_std = traj.theta.std(axis=0)
        x_std = traj.x.astype(float).std(axis=0)
        assert np.all(theta_std < x_std)

    def test_window_too_long_rejected(self):
        bm = random_model(3, n=2)
        traj = run(bm, RunConfig(algorithm="variational", steps=20, seed=0))
        with pytest.raises(ConfigError):
            summarize(traj, window=21)

    def test_channel_order_invariance(self):
        bm = random_model(7, n=3, scale=0.5)
        traj = _gibbs_run(bm, steps=2000)
        s = summarize(traj, window=10, terminal_window=10)
        perm = np.random.default_rng(0).permutation(traj.n_channels)
        shuffled = run(bm, RunConfig(algorithm="gibbs",
                                     schedule="parallel_synchronized",
                                     steps=2000, seed=1))
        shuffled.theta = shuffled.theta[:, perm]
        shuffled.channels = [traj.channels[k] for k in perm]
        s2 = summarize(shuffled, window=10, terminal_window=10)
        for k, channel in enumerate(shuffled.channels):
            orig = traj.channels.index(channel)
            assert s2.mean[k] == pytest.approx(s.mean[orig], rel=1e-12)
            assert s2.std[k] == pytest.approx(s.std[orig], rel=1e-12)


class TestScatter:
    def test_deterministic_limit_sits_on_diagonal(self):
        bm = weak_model(11, n=4)
        var = run(bm, RunConfig(algorithm="variational",
                                schedule="parallel_synchronized", steps=400,
                                seed=1))
        det = run(bm, RunConfig(algorithm="ssi",
                                schedule="parallel_synchronized", steps=3000,
                                seed=1, kernel=KernelSpec(decay=0.5, K=30),
                                deterministic=True))
        # compare terminal values: the damping transient washes out
        dev = np.abs(det.theta[-1] - var.theta[-1])
        assert dev.max() <= 1e-6

    def test_weak_coupling_deviation_small(self):
        bm = weak_model(13, n=6, n_visible=1)
        var = run(bm, RunConfig(algorithm="variational",
                                schedule="parallel_synchronized", steps=400,
                                seed=1))
        ssi = run(bm, RunConfig(algorithm="ssi",
                                schedule="parallel_synchronized", steps=5000,
                                seed=2, kernel=KernelSpec(decay=0.5, K=30)))
        res = scatter_mean_vs_var(ssi, var)
        assert res.mean_abs_dev <= 0.05
        assert res.pairs.shape[0] == len(ssi.hidden_channels())

    def test_clamped_channels_pair_at_observation(self):
        bm = random_model(17, n=3, scale=0.5, n_visible=1)
        var = run(bm, RunConfig(algorithm="variational",
                                schedule="parallel_synchronized", steps=200,
                                seed=1))
        ssi = run(bm, RunConfig(algorithm="ssi",
                                schedule="parallel_synchronized", steps=500,
                                seed=2, kernel=KernelSpec(decay=0.5, K=30)))
        res = scatter_mean_vs_var(ssi, var, include_clamped=True)
        obs_state = bm.observed[0]
        by_channel = dict(zip(map(tuple, res.channels), res.pairs))
        np.testing.assert_allclose(by_channel[(0, "AB"[obs_state])], [1.0, 1.0])
        np.testing.assert_allclose(by_channel[(0, "AB"[1 - obs_state])], [0.0, 0.0])

    def test_model_mismatch_rejected(self):
        a = _gibbs_run(random_model(1, n=2), steps=50)
        b = _gibbs_run(random_model(2, n=2), steps=50)
        with pytest.raises(ValidationError):
            scatter_mean_vs_var(a, b)


class TestStdVsMean:
    def test_clamped_channel_is_degenerate(self):
        bm = random_model(19, n=3, scale=0.5, n_visible=1)
        traj = run(bm, RunConfig(algorithm="ssi",
                                 schedule="parallel_synchronized", steps=800,
                                 seed=1, kernel=KernelSpec(decay=0.5, K=30)))
        res = std_vs_mean(traj)
        obs_state = bm.observed[0]
        k = traj.channels.index((0, "AB"[obs_state]))
        assert res.pairs[k, 0] == 1.0 and res.pairs[k, 1] == 0.0

    def test_strong_net_channel_settles_quietly(self):
        net = strong_two_neuron_net()
        sim = simulate(net, 3000, seed=4, y0=[0.5, 0.5])
        terminal = sim.traces[-1000:]
        assert terminal.std(axis=0).max() < 0.01

    def test_extreme_bins_quieter_than_center(self):
        weak = weak_model(23, n=6)
        traj = run(weak, RunConfig(algorithm="ssi",
                                   schedule="parallel_synchronized",
                                   steps=5000, seed=3,
                                   kernel=KernelSpec(decay=0.5, K=30)))
        weak_res = std_vs_mean(traj)
        net = strong_two_neuron_net()
        cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                        steps=5000, seed=3,
                        kernel=KernelSpec(family="discrete_alpha", a=0.5, K=30),
                        init=np.zeros(2))
        strong_res = std_vs_mean(run_network(net, cfg))
        extreme, center = combined_std_vs_mean([weak_res, strong_res])
        assert extreme < center


class TestSplitResiduals:
    def _chain(self, seed, algorithm, steps, init_scale=0.5):
        bm = random_model(seed, n=6, scale=0.5)
        params, rec0 = remove_biases(derive_pairwise(bm))
        net, rec1 = event_split(params)
        out, rec2 = dale_split(net)
        kernel = KernelSpec(decay=0.5, K=30)
        cfg = RunConfig(algorithm=algorithm, schedule="parallel_synchronized",
                        steps=steps, seed=2, kernel=kernel,
                        init=np.full(out.n, init_scale))
        traj = run_network(out, cfg)
        return readback(traj, [rec0, rec1, rec2])

    def test_variational_residuals_vanish(self):
        rb = self._chain(29, "variational", steps=200)
        res = split_residuals(rb)
        assert np.all(res.pair_std <= 1e-9)
        if len(res.dale_std):
            assert np.all(res.dale_std <= 1e-9)

    def test_unsplit_window_one_residual_zero(self):
        # complementarity is exact for the model-space engine at K=1
        bm = random_model(31, n=4, scale=0.5)
        traj = run(bm, RunConfig(algorithm="ssi",
                                 schedule="parallel_synchronized", steps=400,
                                 seed=1, kernel=KernelSpec(decay=0.5, K=1)))
        sums = traj.theta[:, 0::2] + traj.theta[:, 1::2]
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_sampled_split_run_quantiles(self):
        rb = self._chain(37, "ssi", steps=3000)
        res = split_residuals(rb)
        assert np.all(np.isfinite(res.pair_std))
        assert res.pair_quantiles["0.5"] <= 0.2
        rows = histogram(res.pair_std, bins=10)
        assert rows[:, 2].sum() == len(res.pair_std)


class TestHistogram:
    def test_counts_and_edges(self):
        rows = histogram([0.0, 0.25, 0.5, 0.75, 1.0], bins=4, lo=0.0, hi=1.0)
        assert rows.shape == (4, 3)
        assert rows[:, 2].sum() == 5
        assert rows[0, 0] == 0.0 and rows[-1, 1] == 1.0
