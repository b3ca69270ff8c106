"""Kernel weights, trace accumulators and their agreement."""

import numpy as np
import pytest
from scipy.integrate import quad

from spikebm.errors import ConfigError
from spikebm.kernels import (DISCRETE_ALPHA, KernelSpec, SpikeHistory,
                             continuous_alpha, convolve_trace, discrete_alpha,
                             exponential_normalized, recursive_trace)


class TestExponentialNormalized:
    def test_adjacent_ratio(self):
        w = exponential_normalized(0.5, 30)
        assert w[0] / w[1] == pytest.approx(np.exp(0.5), rel=1e-12)

    def test_single_weight(self):
        for decay in (0.1, 0.5, 3.0):
            np.testing.assert_array_equal(exponential_normalized(decay, 1), [1.0])

    def test_sums_to_one(self):
        assert abs(exponential_normalized(0.5, 30).sum() - 1.0) <= 1e-12

    def test_rejects_bad_parameters(self):
        with pytest.raises(ConfigError):
            exponential_normalized(0.0, 30)
        with pytest.raises(ConfigError):
            exponential_normalized(0.5, 0)


class TestDiscreteAlpha:
    def test_one_step_kernel(self):
        w = discrete_alpha(1.0, 1.0, 5)
        np.testing.assert_array_equal(w, [1.0, 0.0, 0.0, 0.0, 0.0])

    def test_geometric(self):
        np.testing.assert_allclose(discrete_alpha(0.5, 1.0, 4),
                                   [0.5, 0.25, 0.125, 0.0625])

    def test_rejects_overdamped(self):
        with pytest.raises(ConfigError):
            discrete_alpha(2.0, 1.0, 5)

    def test_converges_to_continuous(self):
        # acceptance tolerance: 1e-3 over tau in [0, 10] at eps = 1e-4
        a, eps = 1.0, 1e-4
        K = 100_001
        w = discrete_alpha(a, eps, K)
        tau = np.arange(K) * eps
        assert np.max(np.abs(w - continuous_alpha(a, tau))) <= 1e-3


class TestContinuousAlpha:
    def test_values_at_zero(self):
        assert continuous_alpha(1.0, 0.0) == 1.0
        assert continuous_alpha(2.0, 0.0) == 2.0

    def test_negative_time_rejected(self):
        with pytest.raises(ConfigError):
            continuous_alpha(1.0, -0.1)

    def test_unit_integral_by_quadrature(self):
        for a in (0.3, 1.0, 2.5):
            total, _ = quad(lambda t: continuous_alpha(a, t), 0, np.inf)
            assert total == pytest.approx(1.0, abs=1e-6)


def _history_from(samples, capacity, channels=1):
    hist = SpikeHistory(capacity, channels)
    for s in samples:
        hist.push(0, float(s))
    return hist


class TestConvolveTrace:
    def test_all_ones_with_normalized_kernel(self):
        w = exponential_normalized(0.5, 10)
        hist = _history_from([1] * 10, 10)
        assert convolve_trace(hist, w) == pytest.approx(1.0, abs=1e-12)

    def test_all_zeros(self):
        w = exponential_normalized(0.5, 10)
        hist = _history_from([0] * 10, 10)
        assert convolve_trace(hist, w) == 0.0

    def test_alternating_stream_matches_direct_sum(self):
        w = exponential_normalized(0.5, 30)
        samples = [(t + 1) % 2 for t in range(40)]  # ends ..., 1, 0 -> newest 0
        hist = _history_from(samples, 30)
        # newest-first: weight k (0-based) multiplies samples[-1-k]
        want = sum(w[k] * samples[-1 - k] for k in range(30))
        assert convolve_trace(hist, w) == pytest.approx(want, abs=1e-12)

    def test_warmup_renormalization(self):
        w = exponential_normalized(0.5, 30)
        hist = _history_from([1, 1, 1], 30)
        assert convolve_trace(hist, w) == pytest.approx(1.0, abs=1e-12)
        raw = convolve_trace(hist, w, renormalize=False)
        assert raw == pytest.approx(w[:3].sum(), abs=1e-12)

    def test_empty_channel_yields_zero(self):
        hist = SpikeHistory(5, 2)
        hist.push(1, 1.0)
        w = exponential_normalized(0.5, 5)
        assert convolve_trace(hist, w, channel=0) == 0.0


class TestRecursiveTrace:
    def test_zero_stays_zero(self):
        assert recursive_trace(0.0, 0, 0.5, 1.0) == 0.0

    def test_all_ones_fixed_point(self):
        assert recursive_trace(1.0, 1, 0.5, 1.0) == 1.0

    def test_stays_in_unit_interval(self):
        g = np.random.default_rng(0)
        for a in (0.2, 0.5, 0.9, 1.0):
            y = g.uniform()
            for _ in range(500):
                y = recursive_trace(y, int(g.integers(2)), a, 1.0)
                assert 0.0 <= y <= 1.0

    @pytest.mark.parametrize("a,K", [(0.1, 30), (0.5, 30), (0.5, 200)])
    def test_matches_truncated_convolution_within_tail_bound(self, a, K):
        eps = 1.0
        g = np.random.default_rng(3)
        spikes = g.integers(0, 2, size=1000)
        w = discrete_alpha(a, eps, K)
        hist = SpikeHistory(K, 1)
        y = 0.0
        worst = 0.0
        for t, s in enumerate(spikes):
            y = recursive_trace(y, int(s), a, eps)
            hist.push(0, float(s))
            if t + 1 >= K:
                conv = convolve_trace(hist, w, renormalize=False)
                worst = max(worst, abs(y - conv))
        # once the geometric tail drops below float resolution, accumulated
        # rounding of the two summation orders is what remains
        assert worst <= max((1.0 - a * eps) ** K, 1e-12)


class TestKernelSpec:
    def test_round_trip(self):
        spec = KernelSpec(family=DISCRETE_ALPHA, a=0.25, eps_step=1.0, K=12)
        assert KernelSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            KernelSpec.from_dict({"family": "exponential_normalized", "tau": 3})

    def test_weights_dispatch(self):
        np.testing.assert_allclose(KernelSpec(decay=0.5, K=4).weights(),
                                   exponential_normalized(0.5, 4))
        np.testing.assert_allclose(
            KernelSpec(family=DISCRETE_ALPHA, a=0.5, K=4).weights(),
            discrete_alpha(0.5, 1.0, 4))


class TestSpikeHistoryChannels:
    def test_channels_advance_independently(self):
        hist = SpikeHistory(3, 2)
        hist.push(0, 1.0)
        hist.push(0, 0.0)
        hist.push(1, 1.0)
        w = np.array([0.5, 0.3, 0.2])
        sums = hist.weighted_sum(w)
        assert sums[0] == pytest.approx(0.3 / 0.8)  # newest 0, then 1
        assert sums[1] == pytest.approx(1.0)        # single sample renormalized

    def test_fill_saturates(self):
        hist = SpikeHistory(4, 1)
        hist.fill(0, 1.0)
        w = exponential_normalized(1.0, 4)
        assert convolve_trace(hist, w) == pytest.approx(1.0, abs=1e-12)
