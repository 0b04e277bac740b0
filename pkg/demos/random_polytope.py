"""One random polytope conv{+-G_i}: inradius bracket and a distance bound to B_1^n.

    python3 demos/random_polytope.py [n] [m]
"""

import sys

import numpy as np

from gluskin.experiments import bm_upper_bound
from gluskin.polytope import inradius_bounds
from gluskin.sampling import Seed, sample_gluskin

n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
m = int(sys.argv[2]) if len(sys.argv) > 2 else n ** 2
seed = Seed(2024)

P = sample_gluskin(n, m, seed)
lo, hi = inradius_bounds(P, 2000, seed.child("directions"))
print(f"n={n} m={m}  full dimensional: {P.is_full_dimensional()}")
print(f"largest generator norm {np.linalg.norm(P.gamma, axis=0).max():.3f}")
print(f"inradius in [{lo:.4f}, {hi:.4f}]")

d, T, converged = bm_upper_bound(P, restarts=4, seed=seed.child("bm"))
print(f"distance to the cross-polytope <= {d:.3f} (local search converged: {converged})")
print(f"for scale: sqrt(n) = {n ** 0.5:.3f}, n = {n}")
