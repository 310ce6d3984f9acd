"""Empirical particle density of a large random plane partition against the
limit density phi/pi.

Column t of the particle picture holds the points pi[i,j] - (i+j-1)/2 with
i - j = t.  For q = e^{-r} and small r, the fraction of occupied sites near
(r t, r h) = (tau, chi) approaches density(tau, chi).
"""
import math

import numpy as np

from planeparts import BulkPoint, RngStream, in_region_A, sample_plane_partition
from planeparts.sampler import Window, to_point_configuration

r = 0.05
q = math.exp(-r)
n_samples = 40

tau = 0.0
chis = np.linspace(-1.0, 1.5, 11)

# sites of column t = 0 that sit at chi within +-band of each target
band = 0.1
window = Window(0, 0, int(2 * (chis[0] - band) / r) - 2, int(2 * (chis[-1] + band) / r) + 2)

hits = np.zeros(len(chis))
sites = np.zeros(len(chis))
for k in range(n_samples):
    pi = sample_plane_partition(q, rng=RngStream(314, k))
    cfg = to_point_configuration(pi, window)
    h2 = np.arange(window.h2_min, window.h2_max + 1)
    valid = cfg.valid[0]
    occ = cfg.occ[0]
    for i, chi in enumerate(chis):
        sel = valid & (np.abs(r * h2 / 2 - chi) <= band)
        hits[i] += occ[sel].sum()
        sites[i] += sel.sum()

print(f"r = {r}, {n_samples} samples, column t = 0")
print(f"{'chi':>6} {'empirical':>10} {'limit':>10}")
for chi, h, s in zip(chis, hits, sites):
    limit = BulkPoint.at(tau, chi).density if in_region_A(tau, chi) else float("nan")
    print(f"{chi:6.2f} {h / s:10.4f} {limit:10.4f}")
# below the liquid region the column is frozen (density 1); the top of the
# column (chi -> inf at tau = 0) thins out to 0
