import numpy as np
import pytest
from scipy.stats import norm

from symradio.core import complex_normal, make_rng
from symradio.fdsr import (
    FdsrChannel,
    cancel_and_detect,
    coherent_bpsk_ber,
    fdsr_detect_batch,
    synthesize_fdsr_block,
)


def simulate(ch, K, snr_db, n, seed):
    rng = make_rng(seed)
    s = np.where(rng.random((n, K)) < 0.5, 1.0, -1.0)
    c = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    sigma2 = 10 ** (-snr_db / 10)
    y = (ch.beta1 + ch.beta2 * c[:, None]) * s + complex_normal((n, K), sigma2, rng)
    c_idx = fdsr_detect_batch(y, ch, 1.0, s, "bpsk")
    return np.mean(np.where(c_idx == 0, 1.0, -1.0) != c), sigma2


class TestSynthesis:
    def test_examples(self):
        blk = synthesize_fdsr_block(FdsrChannel(1.0, 0.2), 1.0, [1.0], 1.0, 0.0)
        assert blk.samples[0, 0] == pytest.approx(1.2)
        blk = synthesize_fdsr_block(FdsrChannel(1.0, 0.5), 1.0, [1, -1], -1, 0.0)
        np.testing.assert_allclose(blk.samples[:, 0], [0.5, -0.5])
        blk = synthesize_fdsr_block(FdsrChannel(0.7j, 0.0), 1.0, [1, -1], 1, 0.0)
        np.testing.assert_allclose(blk.samples[:, 0], [0.7j, -0.7j])

    def test_residual_range(self):
        with pytest.raises(ValueError):
            FdsrChannel(1.0, 0.1, residual_factor=1.5)


class TestDetection:
    def test_noiseless(self):
        ch = FdsrChannel(1.0, 0.1)
        for c in (1, -1):
            blk = synthesize_fdsr_block(ch, 1.0, [1, -1, 1], c, 0.0)
            assert cancel_and_detect(blk, ch, 1.0, [1, -1, 1], "bpsk") == c

    def test_equals_matched_filter_sign(self):
        rng = make_rng(3)
        ch = FdsrChannel(0.8 + 0.3j, 0.2 - 0.1j)
        s = np.exp(2j * np.pi * rng.random((500, 4)))
        y = complex_normal((500, 4), 1.0, rng)
        r = y - ch.beta1 * s
        sign = np.sign(np.real(np.sum(np.conj(ch.beta2 * s) * r, axis=1)))
        idx = fdsr_detect_batch(y, ch, 1.0, s, "bpsk")
        np.testing.assert_array_equal(np.where(idx == 0, 1.0, -1.0), sign)

    def test_matches_closed_form(self):
        ch = FdsrChannel(1.0, 0.3)
        ber, sigma2 = simulate(ch, 2, 6.0, 200_000, 1)
        theory = coherent_bpsk_ber(1.0, 0.3, sigma2, 2)
        assert abs(ber - theory) < 3 * np.sqrt(theory * (1 - theory) / 200_000)

    def test_closed_form_is_q_function(self):
        assert coherent_bpsk_ber(1.0, 0.5, 0.1, 3) == pytest.approx(norm.sf(np.sqrt(2 * 3 * 0.25 / 0.1)))

    def test_spreading_gain(self):
        # doubling K at half the SNR keeps the BER
        assert coherent_bpsk_ber(1.0, 0.1, 0.01, 2) == pytest.approx(coherent_bpsk_ber(1.0, 0.1, 0.005, 1))

    def test_monotone_in_residual(self):
        bers = [simulate(FdsrChannel(1.0, 0.1, rf), 4, 17.0, 50_000, 2)[0] for rf in (0, 0.05, 0.1, 0.3, 1)]
        assert all(b1 <= b2 + 0.005 for b1, b2 in zip(bers, bers[1:]))

    def test_no_cancellation_degrades(self):
        bers = [simulate(FdsrChannel(r * 0.1, 0.1, 1.0), 4, 17.0, 50_000, 4)[0] for r in (1, 3, 10, 100)]
        assert bers[-1] > 0.45
        assert bers[0] < bers[-1]
