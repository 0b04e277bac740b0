"""Monte Carlo measure of h * B_1^n next to the convolution oracle.

    python3 demos/measure_vs_oracle.py
"""

from gluskin.measure import gaussian_measure_mc, l1_ball_measure_oracle
from gluskin.polytope import CrossPolytope
from gluskin.sampling import Seed

print(f"{'n':>3} {'h':>5} {'oracle':>10} {'estimate':>10}  99% interval")
for n, h in [(1, 0.5), (2, 1.5), (4, 3.0), (8, 6.0), (16, 12.0)]:
    truth = l1_ball_measure_oracle(n, h)
    est = gaussian_measure_mc(CrossPolytope.standard(n), h, 200_000, Seed(1, n))
    flag = "" if est.ci_low <= truth <= est.ci_high else "  <- outside"
    print(f"{n:>3} {h:>5} {truth:>10.6f} {est.estimate:>10.6f}  [{est.ci_low:.6f}, {est.ci_high:.6f}]{flag}")
