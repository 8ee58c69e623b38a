"""
Full-duplex operation: the primary transmitter decodes the backscatter.

The transmitter knows its own symbols, so it can subtract the
self-interference ``sqrt(p) beta1 s_k`` before matched-filtering the
backscattered copy ``sqrt(p) beta2 s_k c``. Cancellation quality is a
deterministic amplitude residual in [0, 1].
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import ReceivedBlock, synthesize_batch
from .modem import build_constellation


@dataclass(frozen=True)
class FdsrChannel:
    beta1: complex
    beta2: complex
    residual_factor: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.residual_factor <= 1.0:
            raise ValueError("residual_factor must lie in [0, 1]")


def synthesize_fdsr_block(ch, p, s_seq, c, sigma2, rng=None):
    s_seq = np.atleast_1d(np.asarray(s_seq, dtype=complex))
    y = synthesize_batch([ch.beta1], [ch.beta2], p, s_seq, c, sigma2, rng)
    return ReceivedBlock(y, s_seq, complex(c))


def fdsr_detect_batch(y, ch, p, s_known, A_c):
    """
    Cancel self-interference and decide c for a batch of blocks.

    y : (..., K) scalar samples; s_known : (..., K). Returns indices.
    """
    A_c = build_constellation(A_c)
    y = np.asarray(y, dtype=complex)
    s_known = np.asarray(s_known, dtype=complex)
    r = y - (1.0 - ch.residual_factor) * np.sqrt(p) * ch.beta1 * s_known
    ref = np.sqrt(p) * ch.beta2 * s_known
    corr = np.sum(ref.conj() * r, axis=-1)
    energy = np.sum(np.abs(ref) ** 2, axis=-1)
    cost = (np.abs(A_c.points) ** 2) * energy[..., None] - 2 * np.real(A_c.points.conj() * corr[..., None])
    return np.argmin(cost, axis=-1)


def cancel_and_detect(block, ch, p, s_seq_known, A_c):
    """Secondary decision ``argmin_c sum_k |r_k - sqrt(p) beta2 s_k c|^2``."""
    samples = block.samples[:, 0] if isinstance(block, ReceivedBlock) else np.ravel(block)
    idx = fdsr_detect_batch(samples, ch, p, s_seq_known, A_c)
    return complex(build_constellation(A_c).points[int(idx)])


def coherent_bpsk_ber(p, beta2, sigma2, K=1):
    """
    BER of BPSK c over the known channel ``sqrt(p) beta2 s_k`` (|s_k| = 1).

    ``Q(sqrt(2 K p |beta2|^2 / sigma2))``.
    """
    snr = K * p * np.abs(beta2) ** 2 / sigma2
    return 0.5 * erfc(np.sqrt(snr))
