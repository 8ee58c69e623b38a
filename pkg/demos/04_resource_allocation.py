"""
Power and reflection allocation.

SISO: four fading states share an average power budget. The allocator
bisects a multiplier on power; a brute-force search over every power
tuple checks it. MISO: the smallest transmit power meeting both rate
targets, found over directions spanned by the two channels.
"""

import numpy as np

from symradio import ChannelState, make_rng
from symradio.allocation import ConstraintSet, allocate_siso, beamform_power_min, brute_force_siso
from symradio.core import complex_normal

rng = make_rng(5)
states = [ChannelState(complex_normal(1, g, rng), 0.5 * complex_normal(1, 1, rng)[0], complex_normal(1, 1, rng))
          for g in (0.2, 1.0, 3.0)]
cons = ConstraintSet(avg_power=1.0)
sol = allocate_siso(states, weights=(1.0, 1.0), constraints=cons, grid=64, sigma2=0.1)
ref = brute_force_siso(states, (1.0, 1.0), cons, grid=128, sigma2=0.1)
print("direct gains  :", np.round([np.abs(s.direct[0]) ** 2 for s in states], 3))
print("allocator p   :", np.round(sol.power, 3), " alpha:", sol.alpha)
print("brute force p :", np.round(ref.power, 3))
print(f"objective {sol.objective:.4f} vs {ref.objective:.4f}, multiplier {sol.multiplier:.4f}")

h_d = complex_normal(4, 1.0, rng)
h_c = 0.3 * complex_normal(4, 1.0, rng)
print("\nMISO, 4 antennas, primary target 1.5 bit/s/Hz")
for rc in (0.0, 0.5, 1.0, 2.0):
    c = ConstraintSet(power_budget=1e3, min_primary_rate=1.5, min_secondary_rate=rc)
    s = beamform_power_min(h_d, h_c, c)
    print(f"  secondary target {rc:.1f}: power {s.objective:8.3f}  rates "
          f"({s.rates['primary']:.3f}, {s.rates['secondary']:.3f})")
