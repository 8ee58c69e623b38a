import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from symradio.core import complex_normal, make_rng
from symradio.rates import (
    CIRCULAR,
    ergodic_rate,
    large_k_secondary_rate,
    primary_lower,
    primary_rate_bounds,
    primary_upper,
    rate_report,
    secondary_rate,
)


def circular_by_quadrature(f1, f2, snr):
    def integrand(phi):
        return np.log2(1 + snr * np.sum(np.abs(f1 + np.exp(1j * phi) * f2) ** 2))

    return quad(integrand, 0, 2 * np.pi, limit=200)[0] / (2 * np.pi)


class TestPrimary:
    def test_hand_example(self):
        up, lo = primary_rate_bounds([1], [0.5], 1.0, 1.0, "bpsk")
        assert up == pytest.approx(0.5 * (np.log2(3.25) + np.log2(1.25)))
        assert up == pytest.approx(1.011, abs=5e-4)
        assert lo == pytest.approx(np.log2(1 + 1 / 1.25))

    @pytest.mark.parametrize("A_c", ["bpsk", "qpsk", "16qam", CIRCULAR])
    def test_no_backscatter(self, A_c):
        up, lo = primary_rate_bounds([1, 1j], [0, 0], 2.0, 0.5, A_c)
        assert up == pytest.approx(np.log2(9)) and lo == pytest.approx(np.log2(9))

    def test_circular_closed_form(self):
        rng = make_rng(3)
        for _ in range(20):
            f1 = complex_normal(3, 1.0, rng)
            f2 = complex_normal(3, 0.5, rng)
            assert primary_upper(f1, f2, 1.0, 0.1, CIRCULAR) == pytest.approx(
                circular_by_quadrature(f1, f2, 10.0), rel=1e-9)

    @pytest.mark.parametrize("A_c", ["bpsk", "qpsk", "16qam", CIRCULAR])
    def test_upper_dominates_lower(self, A_c):
        rng = make_rng(4)
        f1 = complex_normal((10_000, 2), 1.0, rng)
        f2 = complex_normal((10_000, 2), 0.3, rng)
        up, lo = primary_rate_bounds(f1, f2, 1.0, 0.05, A_c)
        assert np.all(up >= lo - 1e-12)

    def test_lower_uses_mean_energy(self):
        # 16-QAM on {1, 3} levels scaled by 1/|3+3j| has E|c|^2 = 10/18
        assert primary_lower([1], [1], 1.0, 1.0, "16qam") == pytest.approx(np.log2(1 + 1 / (1 + 5 / 9)))
        assert primary_lower([1], [1], 1.0, 1.0, "bpsk") == pytest.approx(np.log2(1.5))

    @given(st.floats(0.01, 100), st.floats(1.01, 4))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_power_and_noise(self, p, factor):
        f1, f2 = np.array([0.7 + 0.2j, -0.3j]), np.array([0.2, 0.4 + 0.1j])
        for fn in (primary_upper, primary_lower):
            for A_c in ("bpsk", CIRCULAR):
                assert fn(f1, f2, p * factor, 1.0, A_c) >= fn(f1, f2, p, 1.0, A_c)
                assert fn(f1, f2, p, factor, A_c) <= fn(f1, f2, p, 1.0, A_c)

    def test_circular_monotone_in_alpha(self):
        rng = make_rng(5)
        f1 = complex_normal((500, 1), 1.0, rng)
        link = complex_normal((500, 1), 1.0, rng)
        alphas = np.linspace(0, 1, 33)
        curve = np.stack([primary_upper(f1, a * link, 1.0, 0.01, CIRCULAR) for a in alphas], axis=-1)
        assert np.all(np.diff(curve, axis=-1) >= -1e-12)


class TestSecondary:
    def test_psk_collapses_expectation(self):
        h2 = np.array([0.3 + 0.4j, 1.0])
        g = 2.0 * np.sum(np.abs(h2) ** 2) / 0.5
        for scheme in ("bpsk", "qpsk"):
            assert secondary_rate(h2, 2.0, 0.5, 1, scheme) == pytest.approx(np.log2(1 + g))

    def test_qam_expectation(self):
        pts = np.abs(np.array([1 + 1j, 1 + 3j, 3 + 1j, 3 + 3j]) / abs(3 + 3j)) ** 2
        expected = np.mean(np.log2(1 + 4.0 * pts))
        assert secondary_rate([2.0], 1.0, 1.0, 1, "16qam") == pytest.approx(expected)

    def test_k2_example(self):
        h2 = np.array([np.sqrt(1.5)])
        assert secondary_rate(h2, 1.0, 1.0, 2, "bpsk") == pytest.approx(1.0)

    def test_large_k_decreasing(self):
        for g in (1.0, 10.0, 1e4):
            r = [large_k_secondary_rate([np.sqrt(g)], 1.0, 1.0, K) for K in range(1, 65)]
            assert np.all(np.diff(r) < 0)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            secondary_rate([1.0], 1.0, 1.0, 0, "bpsk")

    def test_report(self):
        rep = rate_report([1], [0.5], [0.5], 1.0, 1.0, 1, "bpsk", "bpsk")
        assert rep.primary_upper == pytest.approx(1.011, abs=5e-4)
        assert rep.M_r == 1


class TestErgodic:
    def test_constant_channel(self):
        def sampler(rng, n):
            return np.ones((n, 1))

        mean, se = ergodic_rate(sampler, lambda f: primary_upper(f, 0 * f, 1.0, 1.0, "bpsk"), 500, make_rng(0))
        assert mean == pytest.approx(1.0) and se == 0.0

    def test_stderr_shrinks(self):
        def sampler(rng, n):
            return complex_normal((n, 1), 1.0, rng)

        def fn(f):
            return primary_upper(f, 0 * f, 1.0, 0.1, "bpsk")

        ratios = []
        for seed in range(5):
            _, a = ergodic_rate(sampler, fn, 4000, make_rng(seed, 0))
            _, b = ergodic_rate(sampler, fn, 8000, make_rng(seed, 1))
            ratios.append(b / a)
        assert np.mean(ratios) == pytest.approx(1 / np.sqrt(2), rel=0.2)

    def test_high_snr_slope(self):
        f1 = complex_normal((200_000, 1), 1.0, make_rng(2))
        r30 = primary_upper(f1, 0 * f1, 1.0, 1e-3, "bpsk").mean()
        r40 = primary_upper(f1, 0 * f1, 1.0, 1e-4, "bpsk").mean()
        assert r40 - r30 == pytest.approx(np.log2(10), abs=0.02)

    def test_requires_trials(self):
        with pytest.raises(ValueError):
            ergodic_rate(lambda rng, n: np.ones(n), lambda x: x, 50, make_rng(0))
