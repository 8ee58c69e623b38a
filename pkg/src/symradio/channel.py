"""
Fading draws and received-signal synthesis.

The batched helpers take arrays with a leading trial axis so Monte Carlo
loops stay vectorized; ``synthesize_block`` is the single-block wrapper.
"""

from dataclasses import dataclass

import numpy as np

from .core import ChannelState, complex_normal, db2lin

#: Default power of the backscatter link relative to the direct link.
DEFAULT_BACKSCATTER_GAIN_DB = -20.0


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    """K received vectors of one secondary symbol period plus the truth."""

    samples: np.ndarray  # (K, M_r)
    s: np.ndarray  # (K,) transmitted primary symbols
    c: complex = None  # secondary symbol, None when absent

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        s = np.atleast_1d(np.asarray(self.s, dtype=complex))
        if samples.shape[0] != s.size:
            raise ValueError("one sample vector per primary symbol is required")
        samples.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "s", s)

    @property
    def K(self):
        return self.samples.shape[0]

    @property
    def M_r(self):
        return self.samples.shape[1]


def sample_flat_rayleigh(length, variance, rng):
    """``length`` i.i.d. CN(0, variance) channel coefficients."""
    if int(length) < 1:
        raise ValueError("length must be >= 1")
    if not variance > 0:
        raise ValueError("variance must be positive")
    return complex_normal(int(length), variance, rng)


def composite_backscatter_channel(l, g, alpha):
    """Double-fading backscatter channel ``alpha * l * g``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return alpha * np.asarray(l, dtype=complex) * np.asarray(g, dtype=complex)


def link_scale(backscatter_gain_db):
    """Amplitude multiplier on l giving the requested mean power ratio."""
    return float(np.sqrt(db2lin(backscatter_gain_db)))


def draw_channel_state(M_r, rng, alpha=1.0, backscatter_gain_db=DEFAULT_BACKSCATTER_GAIN_DB):
    """Rayleigh realization of direct, PTx-STx and STx-receiver links."""
    direct = sample_flat_rayleigh(M_r, 1.0, rng)
    l = link_scale(backscatter_gain_db) * sample_flat_rayleigh(1, 1.0, rng)[0]
    g = sample_flat_rayleigh(M_r, 1.0, rng)
    return ChannelState(direct, l, g, alpha)


def draw_channels(n, M_r, rng, alpha=1.0, backscatter_gain_db=DEFAULT_BACKSCATTER_GAIN_DB):
    """
    Batch of `n` realizations as arrays ``(h1, h2)``, each ``(n, M_r)``.

    Draw order is direct, then l, then g, matching
    :func:`draw_channel_state` only in distribution, not sample by sample.
    """
    h1 = complex_normal((n, M_r), 1.0, rng)
    l = link_scale(backscatter_gain_db) * complex_normal((n, 1), 1.0, rng)
    g = complex_normal((n, M_r), 1.0, rng)
    return h1, composite_backscatter_channel(l, g, alpha)


def received_signal(h1, h2, p, s, c, noise=None):
    """
    Noiseless (or given-noise) superposition, batched.

    Parameters
    ----------
    h1, h2 : array (..., M_r)
    s : array (..., K)
    c : array (...)
    noise : array (..., K, M_r), optional
    """
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    s = np.asarray(s, dtype=complex)
    c = np.asarray(c, dtype=complex)
    eff = h1 + h2 * c[..., None]
    y = np.sqrt(p) * s[..., :, None] * eff[..., None, :]
    if noise is not None:
        y = y + noise
    return y


def synthesize_batch(h1, h2, p, s, c, sigma2, rng):
    h1 = np.asarray(h1, dtype=complex)
    s = np.asarray(s)
    shape = s.shape + (h1.shape[-1],)
    noise = complex_normal(shape, sigma2, rng) if sigma2 > 0 else None
    return received_signal(h1, h2, p, s, c, noise)


def synthesize_block(direct, composite, p, s_seq, c, sigma2, rng=None):
    """
    One secondary symbol period: ``y_k = sqrt(p) (h1 + h2 c) s_k + u_k``.

    The same function models the PRx with ``(f1, f2)``. `c` is constant
    over all K samples of the block.
    """
    direct = np.atleast_1d(np.asarray(direct, dtype=complex))
    composite = np.atleast_1d(np.asarray(composite, dtype=complex))
    s_seq = np.atleast_1d(np.asarray(s_seq, dtype=complex))
    if sigma2 > 0 and rng is None:
        raise ValueError("a random generator is needed when sigma2 > 0")
    y = synthesize_batch(direct, composite, p, s_seq, c, sigma2, rng)
    return ReceivedBlock(y, s_seq, complex(c))
