"""
An RIS as a multi-element backscatter device.

Aligning every element's phase makes the cascaded contributions add
coherently, so the received SNR grows with the square of the number of
elements. With Rayleigh element channels the mean gain is
M + M(M-1) pi^2/16, which approaches the same quadratic law.
"""

import numpy as np

from symradio import make_rng
from symradio.core import complex_normal
from symradio.ris import passive_beamform, ris_received_signal, ris_snr

for M_b in (2, 4, 8, 16, 32):
    ones = np.ones(M_b)
    unit = ris_snr(ones, ones, passive_beamform(ones, ones), 1.0, 1.0)
    rng = make_rng(M_b)
    l, g = complex_normal((20_000, M_b), 1, rng), complex_normal((20_000, M_b), 1, rng)
    theta = np.exp(-1j * (np.angle(l) + np.angle(g)))
    rand = ris_snr(l, g, theta, 1.0, 1.0).mean()
    print(f"M_b={M_b:2d}: unit gains {unit:7.1f}   Rayleigh {rand:7.1f}   "
          f"theory {M_b + M_b * (M_b - 1) * np.pi ** 2 / 16:7.1f}")

# Modulating every element with the same c gives the scalar backscatter model.
ones = np.ones(3)
st = passive_beamform(ones, ones)
print("\nstatic y:", ris_received_signal(ones, ones, st, 1.0, [1.0]).samples.ravel(),
      " modulated with c=-1:", ris_received_signal(ones, ones, st, 1.0, [1.0], c=-1).samples.ravel())
