import numpy as np
import pytest

from symradio.channel import (
    composite_backscatter_channel,
    draw_channel_state,
    draw_channels,
    link_scale,
    received_signal,
    sample_flat_rayleigh,
    synthesize_batch,
    synthesize_block,
)
from symradio.core import make_rng


class TestFading:
    def test_moment(self):
        rng = make_rng(3, 0)
        h = np.array([sample_flat_rayleigh(4, 1.0, rng) for _ in range(25_000)])
        assert h.shape == (25_000, 4)
        assert 0.99 <= np.mean(np.abs(h) ** 2) <= 1.01

    def test_rejects_zero_variance(self):
        with pytest.raises(ValueError):
            sample_flat_rayleigh(1, 0.0, make_rng(0))

    def test_repeatable(self):
        a = sample_flat_rayleigh(8, 1.0, make_rng(5, 2))
        b = sample_flat_rayleigh(8, 1.0, make_rng(5, 2))
        np.testing.assert_array_equal(a, b)

    def test_link_gain(self):
        _, h2 = draw_channels(200_000, 1, make_rng(1), backscatter_gain_db=-10.0)
        assert np.mean(np.abs(h2) ** 2) == pytest.approx(0.1, rel=0.03)
        assert link_scale(0.0) == 1.0

    def test_state(self):
        s = draw_channel_state(3, make_rng(0), alpha=0.5)
        np.testing.assert_allclose(s.composite, 0.5 * s.stx_in * s.stx_out)


class TestComposite:
    def test_examples(self):
        np.testing.assert_allclose(composite_backscatter_channel(1, [1, 1], 1), [1, 1])
        np.testing.assert_allclose(composite_backscatter_channel(0.3, [1 + 0j], 0.5), [0.15])

    def test_alpha_squared_identity(self):
        rng = make_rng(9)
        for alpha in (0.0, 0.3, 1.0):
            l = sample_flat_rayleigh(1, 1.0, rng)[0]
            g = sample_flat_rayleigh(4, 1.0, rng)
            h2 = composite_backscatter_channel(l, g, alpha)
            ratio = np.sum(np.abs(h2) ** 2) / (np.sum(np.abs(g) ** 2) * abs(l) ** 2)
            assert ratio == pytest.approx(alpha**2, abs=1e-12)


class TestSynthesis:
    def test_examples(self):
        y = synthesize_block([1], [0.5], 1, [1], -1, 0.0).samples
        np.testing.assert_allclose(y, [[0.5]])
        y = synthesize_block([1, 1j], [0, 0], 4, [-1], 1, 0.0).samples
        np.testing.assert_allclose(y, [[-2, -2j]])
        y = synthesize_block([1], [0.5], 1, [1, -1], 1, 0.0).samples
        np.testing.assert_allclose(y, [[1.5], [-1.5]])

    def test_linearity(self):
        rng = make_rng(4)
        h1, h2 = draw_channels(1, 3, rng, backscatter_gain_db=0)
        s = np.array([1, -1j, 1j])
        full = synthesize_block(h1[0], h2[0], 2.0, s, 1j, 0.0).samples
        d = synthesize_block(h1[0], 0 * h2[0], 2.0, s, 1j, 0.0).samples
        b = synthesize_block(0 * h1[0], h2[0], 2.0, s, 1j, 0.0).samples
        np.testing.assert_allclose(full, d + b, atol=1e-14)

    def test_noise_power(self):
        y = synthesize_batch(np.zeros((1, 4)), np.zeros((1, 4)), 1.0, np.ones((1, 25_000)), np.ones(1), 0.3,
                             make_rng(8))
        assert np.mean(np.abs(y) ** 2, axis=(0, 1)) == pytest.approx(np.full(4, 0.3), rel=0.02)

    def test_c_constant_over_block(self):
        blk = synthesize_block([1.0], [1.0], 1.0, np.ones(6), -1j, 0.0)
        np.testing.assert_allclose(blk.samples[:, 0], 1 - 1j)
        assert blk.c == -1j and blk.K == 6 and blk.M_r == 1

    def test_needs_rng_with_noise(self):
        with pytest.raises(ValueError):
            synthesize_block([1], [0], 1, [1], 1, 0.1)

    def test_complex_dtype(self):
        y = received_signal(np.ones(2), np.ones(2), 1.0, np.ones(3), np.array(1.0))
        assert y.dtype == complex and y.shape == (3, 2)
