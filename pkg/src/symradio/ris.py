"""
RIS-assisted backscatter: multi-element reflection and passive beamforming.

An RIS of ``M_b`` elements reflects ``sum_m g_m theta_m l_m`` times the
incident signal. When it also carries a secondary symbol, every element
is multiplied by the same ``c``, which gives exactly the scalar
backscatter model used by :mod:`symradio.channel`.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import synthesize_block
from .core import PassivityError


@dataclass(frozen=True, eq=False)
class RisState:
    theta: np.ndarray
    mode: str = "static"
    constant_amplitude: bool = False

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=complex))
        if np.any(np.abs(theta) > 1 + 1e-12):
            raise PassivityError("passive elements need |theta_m| <= 1")
        if self.constant_amplitude and not np.allclose(np.abs(theta), 1.0, atol=1e-12):
            raise PassivityError("constant-amplitude mode needs |theta_m| = 1")
        if self.mode not in ("static", "modulated"):
            raise ValueError("mode must be 'static' or 'modulated'")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def M_b(self):
        return self.theta.size


def passive_beamform(l, g, constant_amplitude=True):
    """
    Phase-aligned reflection ``theta_m = exp(-j(arg l_m + arg g_m))``.

    Every cascaded term ``g_m theta_m l_m`` becomes real positive, so the
    element contributions add coherently. An element with a zero channel
    has no defined phase; it gets ``theta_m = 1`` and a warning.
    """
    l = np.atleast_1d(np.asarray(l, dtype=complex))
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    if l.shape != g.shape:
        raise ValueError("l and g must have the same length")
    theta = np.exp(-1j * (np.angle(l) + np.angle(g)))
    zero = (l == 0) | (g == 0)
    if np.any(zero):
        warnings.warn(f"{zero.sum()} RIS element(s) with zero channel; theta set to 1",
                      RuntimeWarning, stacklevel=2)
        theta[zero] = 1.0
    return RisState(theta, "static", constant_amplitude)


def cascaded_channel(l, g, theta):
    """Scalar ``sum_m g_m theta_m l_m``; broadcasts over leading axes."""
    l, g, theta = (np.asarray(x, dtype=complex) for x in (l, g, theta))
    return np.sum(g * theta * l, axis=-1)


def _theta(theta):
    return theta.theta if isinstance(theta, RisState) else np.asarray(theta, dtype=complex)


def ris_received_signal(l, g, theta, p, s_seq, c=None, sigma2=0.0, rng=None, direct=0.0):
    """
    Received block at a single-antenna SRx behind an RIS.

    Static mode (``c is None``) gives ``y_k = sqrt(p) h_ris s_k + u_k``;
    modulated mode reflects with ``theta_m c`` and gives
    ``y_k = sqrt(p) h_ris s_k c + u_k``. An optional direct link adds
    ``sqrt(p) direct s_k``.
    """
    th = _theta(theta)
    h_ris = cascaded_channel(l, g, th)
    if c is None:
        return synthesize_block([direct + h_ris], [0.0], p, s_seq, 0.0, sigma2, rng)
    if abs(c) > 1 + 1e-12 or np.any(np.abs(th * c) > 1 + 1e-12):
        raise PassivityError("modulated reflection theta_m * c leaves the unit disc")
    if isinstance(theta, RisState) and theta.constant_amplitude and not np.isclose(abs(c), 1.0):
        raise PassivityError("constant-amplitude RIS can only modulate the phase")
    return synthesize_block([direct], [h_ris], p, s_seq, c, sigma2, rng)


def ris_snr(l, g, theta, p, sigma2):
    """Backscatter-link SNR ``p |sum_m g_m theta_m l_m|^2 / sigma2``."""
    return p * np.abs(cascaded_channel(l, g, _theta(theta))) ** 2 / sigma2

