"""Channels of the RIS-assisted link and the large-array Gram approximation.

With many FC antennas the direct links become orthogonal, but every sensor
also reaches the array through the same RIS, so H^H H / N does not tend to a
diagonal matrix. It tends to V(theta) = D_wf + H^r^H K(theta) H^r, which
still couples the sensors. This script draws channels for the default layout
and shows the approximation error shrinking as N grows, together with the
off-diagonal mass that survives.
"""

import numpy as np

from risfusion.channel import composite_channel, draw_realization, gram_v
from risfusion.scenario import build_scenario

sc = build_scenario(seed=0, n_antennas=64, design_restarts=1, design_max_iter=50)
print(f"K={sc.layout.n_sensors} sensors, M={sc.layout.n_ris_elements} RIS elements")
print("direct-link gains d_wf:", np.array2string(sc.params.gains.d_wf, precision=2))
print("RIS-link gains d_wr:   ", np.array2string(sc.params.gains.d_wr, precision=2))
print(f"RIS->FC gain d_rf: {sc.params.gains.d_rf:.3e}, LoS amplitude b = {sc.params.b:.3f}")

rng = np.random.default_rng(1)
theta = sc.theta("random_phases")
print("\n   N   rel. error of H^H H / N vs V   off-diagonal share of V")
for n in (64, 128, 256, 512, 1024):
    s = sc.with_antennas(n)
    err, off = [], []
    for _ in range(50):
        real = draw_realization(s.layout, s.los, s.params, rng)
        h = composite_channel(real, theta)
        v = gram_v(real.h_r, theta, s.params, s.los.a_m)
        err.append(np.linalg.norm(h.conj().T @ h / n - v) / np.linalg.norm(v))
        off.append(np.linalg.norm(v - np.diag(np.diag(v))) / np.linalg.norm(v))
    print(f"{n:5d}   {np.mean(err):.3f}                          {np.mean(off):.3f}")
