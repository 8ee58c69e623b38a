"""
Achievable rates of the primary and secondary links.

Expectations over finite alphabets are exact enumerations with uniform
priors. Passing ``A_c=CIRCULAR`` instead of a constellation evaluates the
primary bound for a continuous-phase secondary symbol ``c = exp(j phi)``
with phi uniform, which has a closed form.

Channel arguments broadcast over leading axes; the last axis is antennas.
"""

from dataclasses import dataclass

import numpy as np

from .modem import build_constellation

#: Sentinel for continuous-phase (uniform on the unit circle) signaling.
CIRCULAR = "circular"


@dataclass(frozen=True)
class RateReport:
    primary_upper: float
    primary_lower: float
    secondary: float
    p: float
    sigma2: float
    K: int
    M_r: int


def _norm2(x):
    return np.sum(np.abs(np.asarray(x, dtype=complex)) ** 2, axis=-1)


def _circular_mean_log2(a, b):
    """``E_phi log2(a + b cos phi)`` for a >= |b|, phi uniform."""
    return np.log2((a + np.sqrt(np.maximum(a * a - b * b, 0.0))) / 2.0)


def primary_upper(f1, f2, p, sigma2, A_c):
    """``E_c log2(1 + p ||f1 + c f2||^2 / sigma2)``."""
    f1 = np.asarray(f1, dtype=complex)
    f2 = np.asarray(f2, dtype=complex)
    snr = p / sigma2
    if isinstance(A_c, str) and A_c == CIRCULAR:
        a = 1 + snr * (_norm2(f1) + _norm2(f2))
        b = 2 * snr * np.abs(np.sum(f1.conj() * f2, axis=-1))
        return _circular_mean_log2(a, b)
    pts = build_constellation(A_c).points
    eff = f1[..., None, :] + pts[:, None] * f2[..., None, :]
    return np.mean(np.log2(1 + snr * _norm2(eff)), axis=-1)


def primary_lower(f1, f2, p, sigma2, A_c):
    """
    Rate with the backscatter path treated as Gaussian interference.

    The interference power carries ``E|c|^2`` of the secondary alphabet
    (one for PSK and for continuous-phase signaling).
    """
    if isinstance(A_c, str) and A_c == CIRCULAR:
        ec2 = 1.0
    else:
        ec2 = build_constellation(A_c).mean_energy
    return np.log2(1 + p * _norm2(f1) / (p * ec2 * _norm2(f2) + sigma2))


def primary_rate_bounds(f1, f2, p, sigma2, A_c):
    """(upper, lower) bounds on the primary rate in bits/s/Hz."""
    return primary_upper(f1, f2, p, sigma2, A_c), primary_lower(f1, f2, p, sigma2, A_c)


def secondary_rate(h2, p, sigma2, K, A_s):
    """
    Secondary rate after the direct link is removed.

    K = 1 averages ``log2(1 + p ||h2 s||^2 / sigma2)`` over the primary
    alphabet; K > 1 uses the spread-code form
    ``(1/K) log2(1 + K p ||h2||^2 / sigma2)``.
    """
    if int(K) < 1:
        raise ValueError("K must be >= 1")
    g = _norm2(h2) * p / sigma2
    if int(K) == 1:
        s2 = np.abs(build_constellation(A_s).points) ** 2
        return np.mean(np.log2(1 + g[..., None] * s2), axis=-1)
    return large_k_secondary_rate(h2, p, sigma2, K)


def large_k_secondary_rate(h2, p, sigma2, K):
    g = _norm2(h2) * p / sigma2
    return np.log2(1 + K * g) / K


def rate_report(f1, f2, h2, p, sigma2, K, A_s, A_c):
    up, lo = primary_rate_bounds(f1, f2, p, sigma2, A_c)
    sec = secondary_rate(h2, p, sigma2, K, A_s)
    return RateReport(float(up), float(lo), float(sec), p, sigma2, int(K), np.shape(f1)[-1])


def ergodic_rate(channel_sampler, rate_fn, trials, rng):
    """
    Monte Carlo mean of a rate over fading.

    Parameters
    ----------
    channel_sampler : callable ``(rng, n) -> draws``
        Returns `n` channel realizations in whatever form `rate_fn` takes.
    rate_fn : callable ``draws -> array (n,)``
    trials : int
        At least 100.

    Returns
    -------
    mean, stderr : float
    """
    if int(trials) < 100:
        raise ValueError("ergodic averaging needs at least 100 trials")
    values = np.asarray(rate_fn(channel_sampler(rng, int(trials))), dtype=float)
    if values.shape != (int(trials),):
        raise ValueError("rate_fn must return one rate per draw")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(trials))
