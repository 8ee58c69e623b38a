"""
Backscatter modulation: constellations, reflection coefficients and loads.

Impedances and reflection coefficients are plain complex numbers (or
complex arrays): ``Z = R + jX``. Every function broadcasts over arrays.
"""

import re

import numpy as np

from .core import Constellation, PassivityError, SingularError, UnsupportedScheme

#: Upper bound on |Gamma| accepted in active-load mode.
ACTIVE_GAMMA_CAP = 10.0


def _gray(i):
    return i ^ (i >> 1)


def build_constellation(scheme):
    """
    Normalized alphabet for ``"bpsk"``, ``"qpsk"`` or ``"<M>qam"``.

    QAM grids are scaled so that the corner point has unit amplitude,
    so ``max |c| = 1`` for every scheme. Square orders only.

    >>> build_constellation("bpsk").points
    array([ 1.+0.j, -1.+0.j])
    """
    if isinstance(scheme, Constellation):
        return scheme
    name = str(scheme).strip().lower().replace("-", "")
    if name == "bpsk":
        return Constellation(np.array([1.0, -1.0]), "BPSK", labels=np.array([0, 1]))
    if name == "qpsk":
        pts = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
        labels = 2 * (pts.real < 0) + (pts.imag < 0)
        return Constellation(pts, "QPSK", labels=labels)
    m = re.fullmatch(r"(\d+)qam|qam(\d+)", name)
    if m is None:
        raise UnsupportedScheme(f"unknown modulation scheme {scheme!r}")
    order = int(m.group(1) or m.group(2))
    side = int(round(np.sqrt(order)))
    if order < 4 or side * side != order:
        raise UnsupportedScheme(f"QAM order must be a perfect square >= 4, got {order}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    ii, qq = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    pts = (levels[ii] + 1j * levels[qq]).ravel()
    pts = pts / np.abs(pts).max()
    bits = int(np.log2(side))
    labels = (_gray(ii) << bits | _gray(qq)).ravel()
    return Constellation(pts, f"{order}QAM", labels=labels)


def gamma_from_symbol(c, alpha, active_load=False):
    """
    Reflection coefficient carrying constellation point `c`.

    With a normalized alphabet ``Gamma = alpha * c``; passive circuits
    need ``alpha <= 1``.
    """
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError("reflection efficiency must be non-negative")
    c = np.asarray(c, dtype=complex)
    if np.any(np.abs(c) > 1 + 1e-12):
        raise PassivityError("constellation point outside the unit disc; normalize first")
    if alpha > 1 and not active_load:
        raise PassivityError(f"alpha={alpha} > 1 requires active-load mode")
    gamma = alpha * c
    if active_load and np.any(np.abs(gamma) > ACTIVE_GAMMA_CAP):
        raise PassivityError(f"|Gamma| exceeds the active-load cap {ACTIVE_GAMMA_CAP}")
    return gamma[()] if gamma.ndim == 0 else gamma


def _check_antenna(z_a):
    z_a = np.asarray(z_a, dtype=complex)
    if np.any(z_a.real <= 0):
        raise ValueError("antenna resistance must be positive")
    return z_a


def impedance_from_gamma(gamma, z_a):
    """Load impedance ``(Z_a* + Gamma Z_a) / (1 - Gamma)`` realizing `gamma`."""
    gamma = np.asarray(gamma, dtype=complex)
    z_a = _check_antenna(z_a)
    if np.any(np.isclose(gamma, 1.0, rtol=0, atol=1e-15)):
        raise SingularError("Gamma = 1 is the open-circuit limit (no finite load)")
    z_l = (np.conj(z_a) + gamma * z_a) / (1 - gamma)
    return z_l[()] if z_l.ndim == 0 else z_l


def gamma_from_impedance(z_l, z_a):
    """Reflection coefficient ``(Z_L - Z_a*) / (Z_L + Z_a)`` of a load."""
    z_l = np.asarray(z_l, dtype=complex)
    z_a = _check_antenna(z_a)
    den = z_l + z_a
    if np.any(np.abs(den) == 0):
        raise SingularError("Z_L = -Z_a short-circuits the reflection")
    gamma = (z_l - np.conj(z_a)) / den
    return gamma[()] if gamma.ndim == 0 else gamma


def active_gain(r_load, x_load, r_ant, x_ant):
    """
    |Gamma|^2 of an active load ``Z_L = -r_load + j x_load`` (r_load > 0).

    Closed form in terms of resistances and reactances; it exceeds one
    whenever ``r_load != r_ant``.
    """
    num = (r_load + r_ant) ** 2 + (x_load + x_ant) ** 2
    den = (r_load - r_ant) ** 2 + (x_load + x_ant) ** 2
    return num / den


def is_active(z_l):
    return np.asarray(z_l).real < 0
