"""
Detecting the backscatter symbol without channel knowledge.

With K = 1 the received samples form 2|A_s| clusters. k-means finds
them, and two labeled pilots tell which clusters carry c = +1.
"""

import numpy as np

from symradio import build_constellation, make_rng
from symradio.channel import draw_channels, synthesize_batch
from symradio.detectors import detect_clustering

A_s = build_constellation("qpsk")
rng = make_rng(21)
h1, h2 = draw_channels(1, 2, rng, backscatter_gain_db=-6.0)
h1, h2 = h1[0], h2[0]
pilots = np.stack([(h1 + h2) * A_s.points[0], (h1 - h2) * A_s.points[0]])

for snr_db in (10, 20, 30):
    s = A_s.points[rng.integers(4, size=(2000, 1))]
    c = np.array([1.0, -1.0])[rng.integers(2, size=2000)]
    y = synthesize_batch(h1, h2, 1.0, s, c, 10 ** (-snr_db / 10), rng)
    c_hat = detect_clustering(y, pilots, [1, -1], A_s, make_rng(0))
    print(f"{snr_db} dB: secondary error rate {np.mean(c_hat != c):.4f}")
