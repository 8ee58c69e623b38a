import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from symradio.core import PassivityError, SingularError, UnsupportedScheme
from symradio.modem import (
    ACTIVE_GAMMA_CAP,
    active_gain,
    build_constellation,
    gamma_from_impedance,
    gamma_from_symbol,
    impedance_from_gamma,
    is_active,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestConstellations:
    def test_bpsk(self):
        np.testing.assert_array_equal(build_constellation("bpsk").points, [1, -1])

    def test_qpsk(self):
        c = build_constellation("qpsk")
        expected = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
        np.testing.assert_allclose(c.points, expected)
        np.testing.assert_allclose(np.abs(c.points), 1.0)

    def test_16qam_against_explicit_grid(self):
        grid = np.array([a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]) / abs(3 + 3j)
        c = build_constellation("16qam")
        assert c.max_amplitude == 1.0
        assert sorted(np.round(c.points, 12), key=lambda z: (z.real, z.imag)) == \
            sorted(np.round(grid, 12), key=lambda z: (z.real, z.imag))

    @pytest.mark.parametrize("m", [4, 16, 64, 256])
    def test_qam_gray_neighbours(self, m):
        c = build_constellation(f"{m}qam")
        d = np.abs(c.points[:, None] - c.points[None])
        dmin = d[d > 0].min()
        i, j = np.nonzero(np.isclose(d, dmin))
        assert np.all(c.bit_errors(i, j) == 1)

    @pytest.mark.parametrize("scheme", ["8qam", "32qam", "qam2", "ook", "bpskk"])
    def test_unsupported(self, scheme):
        with pytest.raises(UnsupportedScheme):
            build_constellation(scheme)

    def test_passthrough(self):
        c = build_constellation("qpsk")
        assert build_constellation(c) is c


class TestReflection:
    def test_examples(self):
        assert gamma_from_symbol(1, 1.0) == 1
        assert gamma_from_symbol(-1, 0.5) == -0.5
        g = gamma_from_symbol((1 + 1j) / np.sqrt(2), 0.8)
        assert g == pytest.approx(0.8 * (1 + 1j) / np.sqrt(2))
        assert abs(g) == pytest.approx(0.8)

    def test_passive_bound(self):
        with pytest.raises(PassivityError):
            gamma_from_symbol(1, 1.2)
        assert gamma_from_symbol(1, 1.2, active_load=True) == pytest.approx(1.2)
        with pytest.raises(PassivityError):
            gamma_from_symbol(1, ACTIVE_GAMMA_CAP * 2, active_load=True)

    def test_unnormalized_symbol(self):
        with pytest.raises(PassivityError):
            gamma_from_symbol(1.5, 0.5)


class TestImpedance:
    def test_examples(self):
        assert impedance_from_gamma(0, 50) == pytest.approx(50)
        assert impedance_from_gamma(0.5, 50) == pytest.approx(150)
        assert impedance_from_gamma(-4, 50) == pytest.approx(-30)
        assert is_active(impedance_from_gamma(-4, 50))
        assert gamma_from_impedance(50, 50) == pytest.approx(0)
        assert gamma_from_impedance(-30, 50) == pytest.approx(-4)
        assert abs(gamma_from_impedance(-30, 50)) ** 2 == pytest.approx(active_gain(30, 0, 50, 0))
        assert active_gain(30, 0, 50, 0) == pytest.approx(16)
        assert gamma_from_impedance(0, 50) == pytest.approx(-1)

    def test_singular(self):
        with pytest.raises(SingularError):
            impedance_from_gamma(1.0, 50)
        with pytest.raises(SingularError):
            gamma_from_impedance(-50, 50)
        with pytest.raises(ValueError):
            gamma_from_impedance(10, -5 + 1j)

    def test_complex_antenna(self):
        # matched load is the conjugate of the antenna impedance
        assert impedance_from_gamma(0, 30 + 20j) == pytest.approx(30 - 20j)

    @given(r=st.floats(0, 4), phi=st.floats(0, 2 * np.pi), ra=st.floats(0.1, 500), xa=finite)
    @settings(max_examples=300)
    def test_roundtrip(self, r, phi, ra, xa):
        gamma = r * np.exp(1j * phi)
        assume(abs(gamma - 1) > 1e-3)
        z_a = complex(ra, xa)
        back = gamma_from_impedance(impedance_from_gamma(gamma, z_a), z_a)
        assert abs(back - gamma) < 1e-10 * max(1.0, abs(gamma)) / min(1.0, abs(gamma - 1))

    @given(rl=st.floats(0, 1e3), xl=finite, ra=st.floats(0.1, 500), xa=finite)
    @settings(max_examples=300)
    def test_passive_loads_reflect_at_most_unity(self, rl, xl, ra, xa):
        assume(abs(complex(rl, xl) + complex(ra, xa)) > 1e-6)
        assert abs(gamma_from_impedance(complex(rl, xl), complex(ra, xa))) <= 1 + 1e-12

    @given(rl=st.floats(0.01, 1e3), xl=finite, ra=st.floats(0.1, 500), xa=finite)
    @settings(max_examples=300)
    def test_active_loads_amplify(self, rl, xl, ra, xa):
        assume(abs(rl - ra) > 1e-3 * ra)
        g = gamma_from_impedance(complex(-rl, xl), complex(ra, xa))
        assert abs(g) > 1
        assert abs(g) ** 2 == pytest.approx(active_gain(rl, xl, ra, xa), rel=1e-9)

    def test_vectorized(self):
        g = np.array([0, 0.5, -4])
        np.testing.assert_allclose(impedance_from_gamma(g, 50), [50, 150, -30])
