"""
From constellation points to antenna loads.

A backscatter device modulates by switching its load impedance. The
reflection coefficient Gamma = alpha c fixes the load; a negative
resistance reflects more than it receives.
"""

import numpy as np

from symradio import build_constellation
from symradio.modem import active_gain, gamma_from_impedance, gamma_from_symbol, impedance_from_gamma

z_a = 50.0 + 0.0j  # antenna impedance

for scheme in ("bpsk", "qpsk", "16qam"):
    c = build_constellation(scheme)
    print(f"{c!r}: max|c| = {c.max_amplitude:.3f}, mean energy = {c.mean_energy:.3f}")

print("\nQPSK at alpha = 0.8")
for c in build_constellation("qpsk").points:
    gamma = gamma_from_symbol(c, 0.8)
    z_l = impedance_from_gamma(gamma, z_a)
    print(f"  c = {c:.3f}  Gamma = {gamma:.3f}  Z_L = {z_l:.2f} ohm")

# Active loads: a negative resistance gives |Gamma| > 1.
z_l = impedance_from_gamma(-4.0, z_a)
print(f"\nGamma = -4 needs Z_L = {z_l:.1f} ohm")
print("|Gamma|^2 from the impedances:", abs(gamma_from_impedance(z_l, z_a)) ** 2)
print("|Gamma|^2 from the closed form:", active_gain(30.0, 0.0, 50.0, 0.0))

# Any load with non-negative resistance stays passive.
rng = np.random.default_rng(0)
loads = rng.uniform(0, 500, 1000) + 1j * rng.uniform(-500, 500, 1000)
print("max |Gamma| over 1000 passive loads:", np.abs(gamma_from_impedance(loads, z_a)).max().round(4))
