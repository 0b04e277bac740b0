"""Optimal log(rho) against log(n), and the local exponent d log(rho) / d log(n).

The exponent creeps toward 5/9 and the s~ exponent toward 8/9; the
correction decays like log log n / log n, so the far end of the range
is needed.

    python3 demos/exponent_sweep.py
"""

import numpy as np

from gluskin.optimizer import exponent_fit

fit = exponent_fit(np.geomspace(100.0, 1e4, 12))
print(f"{'log n':>10} {'log rho':>12} {'slope':>8} {'s~ slope':>9}  binding")
for p in fit.points:
    print(f"{p['log_n']:>10.1f} {p['log_rho']:>12.3f} {p['slope']:>8.4f} {p['s_tilde_slope']:>9.4f}  {p['active']}")
print(f"\n5/9 = {5 / 9:.4f}, 8/9 = {8 / 9:.4f}")
