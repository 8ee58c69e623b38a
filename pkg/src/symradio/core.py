"""
Shared value types, random-stream policy and unit conversions.

Everything downstream works in linear units with complex128 arrays;
dB only appears at configuration and reporting boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SymradioError(ValueError):
    """Base class for every domain error raised by the package."""


class UnsupportedScheme(SymradioError):
    pass


class PassivityError(SymradioError):
    """A reflection coefficient exceeds what the load mode allows."""


class SingularError(SymradioError):
    """A circuit or linear model has no well-defined solution."""


class DegenerateChannelError(SymradioError):
    pass


class ClusterCollapse(SymradioError):
    pass


class InfeasibleError(SymradioError):
    """No allocation satisfies the constraints.

    ``binding`` names the constraint that could not be met.
    """

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding


class ConfigError(SymradioError):
    def __init__(self, message, field_name=None):
        super().__init__(message if field_name is None else f"{field_name}: {message}")
        self.field_name = field_name


# Unit conversion
def db2lin(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def lin2db(value):
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def noise_variance(snr_db, p=1.0):
    """Noise variance giving transmit SNR ``p / sigma2`` equal to `snr_db`.

    ``snr_db = inf`` maps to a noiseless channel (``sigma2 = 0``).
    """
    snr_db = float(snr_db)
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(p / db2lin(snr_db))


# Random streams
def make_rng(seed, stream_id=0):
    """
    Deterministic generator for one (seed, stream) pair.

    Streams are derived with ``numpy.random.SeedSequence`` spawn keys, so
    distinct stream ids give independent sequences and the same pair
    always reproduces the same draws regardless of call order.

    Parameters
    ----------
    seed : int
        Non-negative 64-bit experiment seed.
    stream_id : int or tuple of int
        Stream label. Tuples let callers key streams on several indices,
        e.g. ``(snr_index, chunk_index)``.
    """
    if isinstance(stream_id, (tuple, list)):
        key = tuple(int(s) for s in stream_id)
    else:
        key = (int(stream_id),)
    ss = np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def complex_normal(shape, variance, rng):
    """i.i.d. CN(0, variance) samples: each quadrature carries variance/2."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


# Value types
def _frozen(a, dtype=complex):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Constellation:
    """
    Normalized finite symbol alphabet.

    Points are stored in a fixed order which is also the tie-breaking
    order of every detector. ``labels`` holds the Gray bit label of each
    point, used to count bit errors.
    """

    points: np.ndarray
    scheme: str
    labels: np.ndarray = None

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise UnsupportedScheme("a constellation needs at least two points")
        if len(np.unique(np.round(pts, 12))) != pts.size:
            raise UnsupportedScheme("constellation points must be distinct")
        amax = np.max(np.abs(pts))
        if not np.isclose(amax, 1.0, rtol=0, atol=1e-12):
            raise UnsupportedScheme(f"max |c| must be 1, got {amax!r}")
        object.__setattr__(self, "points", pts)
        labels = np.arange(pts.size) if self.labels is None else self.labels
        object.__setattr__(self, "labels", _frozen(labels, dtype=np.int64))

    def __len__(self):
        return self.points.size

    @property
    def size(self):
        return self.points.size

    @property
    def max_amplitude(self):
        return float(np.max(np.abs(self.points)))

    @property
    def bits_per_symbol(self):
        return int(np.ceil(np.log2(self.size)))

    @property
    def mean_energy(self):
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def constant_modulus(self):
        return bool(np.allclose(np.abs(self.points), abs(self.points[0])))

    def nearest(self, x):
        """Index of the closest point to each entry of `x` (first wins ties)."""
        x = np.asarray(x)
        return np.argmin(np.abs(x[..., None] - self.points) ** 2, axis=-1)

    def bit_errors(self, idx_hat, idx_true):
        """Number of differing Gray-label bits, elementwise."""
        diff = np.bitwise_xor(self.labels[idx_hat], self.labels[idx_true])
        return _popcount(diff)

    def __repr__(self):
        return f"Constellation({self.scheme}, M={self.size})"


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


@dataclass(frozen=True)
class SystemConfig:
    """Link-level parameters shared by one simulation point."""

    p: float = 1.0
    sigma2: float = 0.1
    K: int = 1
    M_r: int = 1
    alpha: float = 1.0
    seed: int = 0
    active_load: bool = False

    def __post_init__(self):
        if not self.p > 0:
            raise ConfigError("transmit power must be positive", "p")
        if not self.sigma2 > 0:
            raise ConfigError("noise variance must be positive", "sigma2")
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError("must be a positive integer", "K")
        if int(self.M_r) != self.M_r or self.M_r < 1:
            raise ConfigError("must be a positive integer", "M_r")
        if self.alpha < 0 or (self.alpha > 1 and not self.active_load):
            raise ConfigError("reflection efficiency outside [0, 1] without active load", "alpha")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("must fit in an unsigned 64-bit integer", "seed")

    @property
    def snr_db(self):
        return float(lin2db(self.p / self.sigma2))


@dataclass(frozen=True, eq=False)
class ChannelState:
    """
    One flat-fading realization seen by a multi-antenna receiver.

    ``composite`` is always ``alpha * stx_in * stx_out``; use
    :meth:`with_alpha` to rebuild it for another reflection efficiency.
    """

    direct: np.ndarray
    stx_in: complex
    stx_out: np.ndarray
    alpha: float = 1.0
    composite: np.ndarray = field(init=False)

    def __post_init__(self):
        direct = _frozen(np.atleast_1d(self.direct))
        stx_out = _frozen(np.atleast_1d(self.stx_out))
        if direct.shape != stx_out.shape or direct.ndim != 1:
            raise ValueError("direct and stx_out must be vectors of equal length")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "direct", direct)
        object.__setattr__(self, "stx_out", stx_out)
        object.__setattr__(self, "stx_in", complex(self.stx_in))
        object.__setattr__(self, "composite", _frozen(self.alpha * self.stx_in * stx_out))

    @property
    def M_r(self):
        return self.direct.size

    def with_alpha(self, alpha):
        return ChannelState(self.direct, self.stx_in, self.stx_out, alpha)
