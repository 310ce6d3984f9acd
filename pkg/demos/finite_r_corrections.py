"""How fast do finite-q correlations approach their bulk limits?

At a fixed macroscopic point the one-point density at q = e^{-r} is compared
with phi/pi.  The error is O(r) but not monotone: it oscillates as the
rounded lattice point moves relative to the arctic geometry.
"""
import numpy as np

from planeparts import Pattern, convergence_rate_check

r_list = 0.5 / 2.0 ** np.arange(5)
rows, summary = convergence_rate_check(Pattern.parse("0:1"), [(0.0, 0.0), (1.2, -0.1)], r_list)
for row in rows:
    print(f"({row['tau']:4.1f}, {row['chi']:4.1f})  r = {row['r']:.4f}  base {row['base']:>7}  "
          f"finite {row['finite']:.6f}  limit {row['limit']:.6f}  err/r {row['err'] / row['r']:.3f}")
for s in summary:
    print(f"({s['tau']}, {s['chi']}): log-log slope {s['slope']:.2f}")
