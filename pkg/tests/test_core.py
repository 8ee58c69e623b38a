import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symradio.core import (
    ChannelState,
    ConfigError,
    Constellation,
    SystemConfig,
    UnsupportedScheme,
    complex_normal,
    db2lin,
    lin2db,
    make_rng,
    noise_variance,
)


class TestRandomStreams:
    def test_same_stream_repeats(self):
        a = make_rng(7, 0).standard_normal(100)
        b = make_rng(7, 0).standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = make_rng(7, 0).standard_normal(100)
        b = make_rng(7, 1).standard_normal(100)
        assert not np.array_equal(a, b)

    def test_tuple_keys_separate(self):
        a = make_rng(7, (1, 2)).standard_normal(10)
        b = make_rng(7, (2, 1)).standard_normal(10)
        assert not np.array_equal(a, b)

    def test_sample_mean_bound(self):
        x = make_rng(7, 0).standard_normal(10**6)
        assert abs(x.mean()) < 5 / np.sqrt(1e6)

    def test_complex_normal_variance(self):
        z = complex_normal(200_000, 2.5, make_rng(1, 0))
        assert z.dtype == complex
        assert np.mean(np.abs(z) ** 2) == pytest.approx(2.5, rel=0.02)
        assert np.var(z.real) == pytest.approx(np.var(z.imag), rel=0.03)

    @given(st.integers(0, 2**64 - 1))
    @settings(max_examples=25, deadline=None)
    def test_any_u64_seed(self, seed):
        make_rng(seed, 3).random()


class TestUnits:
    @given(st.floats(-80, 80))
    def test_db_roundtrip(self, x):
        assert float(lin2db(db2lin(x))) == pytest.approx(x, abs=1e-9)

    def test_noise_variance(self):
        assert noise_variance(10.0, 2.0) == pytest.approx(0.2)
        assert noise_variance(np.inf) == 0.0


class TestConstellation:
    def test_rejects_unnormalized(self):
        with pytest.raises(UnsupportedScheme):
            Constellation(np.array([2.0, -2.0]), "x")

    def test_rejects_duplicates(self):
        with pytest.raises(UnsupportedScheme):
            Constellation(np.array([1.0, 1.0, -1.0]), "x")

    def test_immutable(self):
        c = Constellation(np.array([1.0, -1.0]), "bpsk")
        with pytest.raises(ValueError):
            c.points[0] = 3

    def test_nearest_first_wins_ties(self):
        c = Constellation(np.array([1.0, -1.0]), "bpsk")
        assert c.nearest(0.0) == 0

    def test_bit_errors_count_label_bits(self):
        c = Constellation(np.array([1, 1j, -1, -1j]), "qpsk", labels=np.array([0, 1, 3, 2]))
        assert c.bit_errors(np.array([2]), np.array([0]))[0] == 2
        assert c.bit_errors(np.array([1]), np.array([0]))[0] == 1


class TestSystemConfig:
    @pytest.mark.parametrize("kw,name", [({"p": 0}, "p"), ({"sigma2": -1}, "sigma2"), ({"K": 0}, "K"),
                                         ({"M_r": 0}, "M_r"), ({"alpha": 1.5}, "alpha"),
                                         ({"seed": -1}, "seed")])
    def test_invalid_names_field(self, kw, name):
        with pytest.raises(ConfigError) as err:
            SystemConfig(**kw)
        assert err.value.field_name == name

    def test_active_load_allows_gain(self):
        assert SystemConfig(alpha=2.0, active_load=True).alpha == 2.0

    def test_snr(self):
        assert SystemConfig(p=1.0, sigma2=0.01).snr_db == pytest.approx(20.0)


class TestChannelState:
    def test_composite(self):
        st_ = ChannelState([1, 1j], 0.3, [1, 2], alpha=0.5)
        np.testing.assert_allclose(st_.composite, [0.15, 0.3])
        np.testing.assert_allclose(st_.with_alpha(1.0).composite, [0.3, 0.6])
        assert st_.M_r == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ChannelState([1, 1], 1.0, [1])
