"""
Full-duplex reading of the backscatter symbol at the transmitter.

The transmitter knows what it sent, subtracts its own echo, and
matched-filters the backscattered copy. Imperfect cancellation leaves a
fraction of the echo, which quickly dominates the weak backscatter path.
"""

import numpy as np

from symradio import make_rng, noise_variance
from symradio.channel import synthesize_batch
from symradio.fdsr import FdsrChannel, coherent_bpsk_ber, fdsr_detect_batch

beta1, beta2, K, n = 1.0, 0.1, 4, 100_000
rng = make_rng(9)
print(" SNR  theory    rf=0      rf=0.05   rf=0.2")
for snr_db in (14, 17, 20):
    sigma2 = noise_variance(snr_db)
    s = np.where(rng.random((n, K)) < 0.5, 1.0, -1.0)
    ci = rng.integers(2, size=n)
    c = np.array([1.0, -1.0])[ci]
    y = synthesize_batch([beta1], [beta2], 1.0, s, c, sigma2, rng)[..., 0]
    bers = [np.mean(fdsr_detect_batch(y, FdsrChannel(beta1, beta2, rf), 1.0, s, "bpsk") != ci)
            for rf in (0.0, 0.05, 0.2)]
    theory = coherent_bpsk_ber(1.0, beta2, sigma2, K)
    print(f"{snr_db:4d}  {theory:.2e}  " + "  ".join(f"{b:.2e}" for b in bers))
