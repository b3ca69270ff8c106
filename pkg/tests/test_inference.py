"""Engines: proposals, steps, runners, free energy, determinism."""

import io

import numpy as np
import pytest
from scipy.special import expit

from helpers import random_model, strong_two_neuron_net, weak_model
from spikebm import reports
from spikebm.errors import ConfigError, ValidationError
from spikebm.inference import (InferenceState, RunConfig, gibbs_chain_marginals,
                               free_energy, gibbs_step, moving_average,
                               proposal, run, run_network, ssi_step,
                               variational_step)
from spikebm.kernels import DISCRETE_ALPHA, KernelSpec, SpikeHistory
from spikebm.model import (BoltzmannMachine, derive_pairwise,
                           exact_posterior_marginals)


class _FixedDraws:
    """Draw stub feeding a prescribed uniform sequence to step functions."""

    def __init__(self, values, channels=8):
        self.values = list(values)
        self.channels = channels
        self.k = 0

    def at(self, t, channel):
        v = self.values[self.k % len(self.values)]
        self.k += 1
        return v

    def row(self, t):
        out = [self.at(t, c) for c in range(self.channels)]
        return np.asarray(out)


def _state_for(params, theta=None, with_history=None):
    n = params.n
    theta = np.full((n, 2), 0.5) if theta is None else np.asarray(theta, float)
    hist = None
    if with_history is not None:
        hist = SpikeHistory(with_history, 2 * n)
    return InferenceState(t=0, theta=theta.copy(), phi=theta.copy(),
                          y=np.zeros(n, dtype=np.int8), history=hist)


class TestProposal:
    def test_zero_parameters(self):
        params = derive_pairwise(BoltzmannMachine.from_terms(2))
        np.testing.assert_allclose(proposal(params, np.full((2, 2), 0.5), 0),
                                   [0.5, 0.5])

    def test_large_bias_saturates(self):
        bm = BoltzmannMachine.from_terms(1, biases={(0, "A"): 50.0})
        params = derive_pairwise(bm)
        phi = proposal(params, np.full((1, 2), 0.5), 0)
        assert phi[0] < 1e-20

    def test_hand_computed_two_unit(self):
        bm = BoltzmannMachine.from_terms(
            2, couplings={(0, "A", 1, "A"): 1.5, (0, "A", 1, "B"): -0.5},
            biases={(0, "A"): 0.25})
        params = derive_pairwise(bm)
        theta = np.array([[0.5, 0.5], [0.7, 0.3]])
        # logit_A = W[0A,1A]*0.7 + W[0A,1B]*0.3 - b[0A]
        logit = 1.5 * 0.7 + (-0.5) * 0.3 - 0.25
        phi = proposal(params, theta, 0)
        assert phi[0] == pytest.approx(expit(logit), abs=1e-12)
        assert phi[1] == pytest.approx(expit(-logit), abs=1e-12)


class TestGibbsStep:
    def test_zero_model_is_uniform(self):
        params = derive_pairwise(BoltzmannMachine.from_terms(1))
        n_draws = 100_000
        g = np.random.default_rng(0)
        draws = _FixedDraws(g.random(n_draws))
        state = _state_for(params)
        ones = 0
        for _ in range(n_draws):
            state.t = 0
            nxt = gibbs_step(params, state, 0, draws)
            ones += int(nxt.y[0])
        p = ones / n_draws
        assert abs(p - 0.5) <= 3 * np.sqrt(0.25 / n_draws)

    def test_bias_logit_frequency(self):
        delta = 0.8
        bm = BoltzmannMachine.from_terms(1, biases={(0, "A"): -delta})
        params = derive_pairwise(bm)
        want = float(expit(delta))
        n_draws = 100_000
        draws = _FixedDraws(np.random.default_rng(1).random(n_draws))
        state = _state_for(params)
        hits = 0
        for _ in range(n_draws):
            state.t = 0
            nxt = gibbs_step(params, state, 0, draws)
            hits += int(nxt.y[0] == 0)
        sigma = np.sqrt(want * (1 - want) / n_draws)
        assert abs(hits / n_draws - want) <= 3 * sigma

    def test_long_chain_matches_oracle(self):
        bm = random_model(17, n=3, scale=0.6, n_visible=1)
        est = gibbs_chain_marginals(bm, steps=1_000_000, seed=5)
        exact = exact_posterior_marginals(bm)
        for i in exact:
            assert abs(est[i][0] - exact[i][0]) <= 0.01

    def test_chain_table_replays_step_function(self):
        bm = random_model(23, n=3, scale=0.7, n_visible=1)
        steps = 3000
        burn = 300
        traj = run(bm, RunConfig(algorithm="gibbs",
                                 schedule="sequential_random_scan",
                                 steps=steps, seed=9))
        est = gibbs_chain_marginals(bm, steps=steps, seed=9, burnin=burn)
        for i in bm.hidden():
            from_traj = traj.theta[burn:, 2 * i + 1].mean()
            assert from_traj == pytest.approx(est[i][1], abs=1e-12)


class TestVariationalStep:
    def test_zero_model_single_touch(self):
        params = derive_pairwise(BoltzmannMachine.from_terms(2))
        state = _state_for(params, theta=[[0.9, 0.1], [0.2, 0.8]])
        nxt = variational_step(params, state, 0)
        np.testing.assert_allclose(nxt.theta[0], [0.5, 0.5])
        np.testing.assert_allclose(nxt.theta[1], [0.2, 0.8])

    def test_fixed_point_is_identity(self):
        bm = random_model(31, n=3, scale=0.4)
        params = derive_pairwise(bm)
        traj = run(bm, RunConfig(algorithm="variational",
                                 schedule="sequential_cyclic", steps=400,
                                 seed=0))
        state = _state_for(params, theta=traj.theta[-1].reshape(3, 2))
        for i in range(3):
            nxt = variational_step(params, state, i)
            np.testing.assert_allclose(nxt.theta, state.theta, atol=1e-10)

    def test_network_variational_reaches_deterministic_fixed_point(self):
        net = strong_two_neuron_net()
        cfg = RunConfig(algorithm="variational",
                        schedule="parallel_synchronized", steps=200, seed=0,
                        init=np.array([0.5, 0.5]))
        traj = run_network(net, cfg)
        terminal = traj.theta[-1]
        resid = np.max(np.abs(terminal - expit(net.W @ terminal + net.e)))
        assert resid <= 1e-10


class TestSsiStep:
    @pytest.mark.parametrize("schedule", ["sequential_cyclic",
                                          "sequential_random_scan",
                                          "parallel_synchronized"])
    def test_window_one_reduces_to_gibbs(self, schedule):
        bm = random_model(3, n=3, scale=0.6, n_visible=1)
        cfg_g = RunConfig(algorithm="gibbs", schedule=schedule, steps=600, seed=4)
        cfg_s = RunConfig(algorithm="ssi", schedule=schedule, steps=600, seed=4,
                          kernel=KernelSpec(decay=0.5, K=1))
        tg, ts = run(bm, cfg_g), run(bm, cfg_s)
        assert np.array_equal(tg.theta, ts.theta)
        assert np.array_equal(tg.phi, ts.phi)
        assert np.array_equal(tg.x, ts.x)

    def test_expected_update_matches_kernel_arithmetic(self):
        # E[theta' | state] = sum_{k>=2} w[k-1]*shifted history + w[0]*phi
        bm = random_model(41, n=2, scale=0.8)
        params = derive_pairwise(bm)
        kernel = KernelSpec(decay=0.5, K=4)
        w = kernel.weights()
        state = _state_for(params, theta=[[0.6, 0.4], [0.3, 0.7]],
                           with_history=4)
        past = [1.0, 0.0, 1.0]  # newest first, channel (0, A)
        for v in reversed(past):
            state.history.push(0, v)
            state.history.push(1, 1.0 - v)
        phi = proposal(params, state.theta, 0)
        p_a = phi[0] / (phi[0] + phi[1])
        expected = w[0] * p_a + sum(w[k + 1] * past[k] for k in range(3))

        reps = 100_000
        draws = _FixedDraws(np.random.default_rng(7).random(reps))
        acc = 0.0
        for _ in range(reps):
            nxt = ssi_step(params, state, 0, kernel, draws)
            acc += nxt.theta[0, 0]
        mc = acc / reps
        sigma = w[0] * np.sqrt(p_a * (1 - p_a) / reps)
        assert abs(mc - expected) <= 3 * sigma

    def test_deterministic_mode_is_damped_variational(self):
        bm = weak_model(47, n=4)
        cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                        steps=3000, seed=1, kernel=KernelSpec(decay=0.5, K=30),
                        deterministic=True)
        traj = run(bm, cfg)
        var = run(bm, RunConfig(algorithm="variational",
                                schedule="parallel_synchronized", steps=400,
                                seed=1))
        assert np.max(np.abs(traj.theta[-1] - var.theta[-1])) <= 1e-6

    def test_weak_coupling_tracks_variational_fixed_point(self):
        bm = weak_model(53, n=4)
        var = run(bm, RunConfig(algorithm="variational",
                                schedule="parallel_synchronized", steps=400,
                                seed=1))
        cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                        steps=5000, seed=2, kernel=KernelSpec(decay=0.5, K=30))
        traj = run(bm, cfg)
        tail_mean = traj.theta[-2000:].mean(axis=0)
        assert np.max(np.abs(tail_mean - var.theta[-1])) <= 0.05

    def test_channel_complementarity(self):
        bm = random_model(5, n=3, scale=0.7, n_visible=1)
        for kernel in (KernelSpec(decay=0.5, K=30),
                       KernelSpec(family=DISCRETE_ALPHA, a=0.5, K=30)):
            cfg = RunConfig(algorithm="ssi", schedule="parallel_synchronized",
                            steps=500, seed=3, kernel=kernel)
            traj = run(bm, cfg)
            sums = traj.theta[:, 0::2] + traj.theta[:, 1::2]
            assert np.max(np.abs(sums - 1.0)) <= 1e-12


class TestRun:
    def test_zero_steps_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(algorithm="gibbs", steps=0)

    def test_identical_seeds_identical_bytes(self):
        bm = random_model(61, n=3, n_visible=1)
        cfg = RunConfig(algorithm="ssi", schedule="sequential_random_scan",
                        steps=300, seed=12, kernel=KernelSpec(decay=0.5, K=10))
        blobs = []
        for _ in range(2):
            traj = run(bm, cfg)
            buf = io.StringIO()
            for row in reports.trajectory_rows(traj):
                buf.write(repr(row))
            blobs.append(buf.getvalue())
        assert blobs[0] == blobs[1]

    def test_different_seeds_differ(self):
        bm = random_model(61, n=3, n_visible=1)
        t1 = run(bm, RunConfig(algorithm="gibbs", steps=100, seed=1))
        t2 = run(bm, RunConfig(algorithm="gibbs", steps=100, seed=2))
        assert not np.array_equal(t1.x, t2.x)

    def test_visible_clamped_every_step(self):
        bm = random_model(67, n=4, scale=0.8, n_visible=2)
        for algo in ("gibbs", "variational", "ssi"):
            traj = run(bm, RunConfig(algorithm=algo, steps=120, seed=5))
            for i, s in bm.observed.items():
                np.testing.assert_array_equal(traj.theta[:, 2 * i + s], 1.0)
                np.testing.assert_array_equal(traj.theta[:, 2 * i + 1 - s], 0.0)

    def test_all_observed_rejected(self):
        bm = random_model(71, n=2, n_visible=2)
        with pytest.raises(ValidationError):
            run(bm, RunConfig(algorithm="gibbs", steps=10, seed=0))


class TestFreeEnergy:
    def test_uniform_entropy_only(self):
        bm = BoltzmannMachine.from_terms(3)
        assert free_energy(bm, np.full((3, 2), 0.5)) == pytest.approx(
            -3 * np.log(2), abs=1e-12)

    def test_deterministic_assignment_gives_energy(self):
        from spikebm.model import energy
        bm = random_model(73, n=3)
        y = [0, 1, 1]
        theta = np.zeros((3, 2))
        for i, s in enumerate(y):
            theta[i, s] = 1.0
        assert free_energy(bm, theta) == pytest.approx(energy(bm, y), abs=1e-12)

    def test_sequential_descent(self):
        for seed in (1, 2, 3):
            bm = random_model(seed, n=4, scale=0.5, n_visible=1)
            traj = run(bm, RunConfig(algorithm="variational",
                                     schedule="sequential_cyclic", steps=200,
                                     seed=0))
            values = [free_energy(bm, traj.theta0)]
            values += [free_energy(bm, traj.theta[t]) for t in range(traj.steps)]
            diffs = np.diff(values)
            assert np.all(diffs <= 1e-10)

    def test_out_of_range_rejected(self):
        bm = BoltzmannMachine.from_terms(2)
        with pytest.raises(ValidationError):
            free_energy(bm, np.array([[1.2, -0.2], [0.5, 0.5]]))


class TestMovingAverage:
    def test_constant_series(self):
        np.testing.assert_allclose(moving_average(np.full(10, 0.3), 4), 0.3)

    def test_window_one_is_identity(self):
        x = np.arange(6, dtype=float)
        np.testing.assert_array_equal(moving_average(x, 1), x)

    def test_alternating_window_two(self):
        x = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
        np.testing.assert_allclose(moving_average(x, 2),
                                   [0.0, 0.5, 0.5, 0.5, 0.5])

    def test_matrix_input(self):
        x = np.arange(12, dtype=float).reshape(6, 2)
        out = moving_average(x, 3)
        assert out.shape == x.shape
        np.testing.assert_allclose(out[-1], x[-3:].mean(axis=0))
