"""
Random codes at small blocklengths
==================================

Random i.i.d. codebooks over BSC(0.11) at rate 0.3. Two effects improve
with n: the decoding error and the distance between the observer's
empirical output type and its target.
"""

import os

import numpy as np

from ictk import simulate_single_user, tv_convergence_profile
from ictk.channels import resolve_channel

ch = resolve_channel("bsc:0.11")
p_x = [0.5, 0.5]

print(f"{'n':>5} {'error':>8} {'E TV':>8} {'P(TV>=0.1)':>11}")
for n in (25, 50, 100, 200, 400):
    # above ~n=80 the codebook no longer fits in memory; the ensemble mode
    # draws the ML error event from its exact law instead
    mode = "explicit" if n <= 50 else "ensemble"
    rep = simulate_single_user(ch, p_x, n, 0.3, trials=500, seed=0, codebook=mode)
    print(f"{n:5d} {rep.error_rate:8.3f} {rep.mean_tv:8.4f} {rep.tv_exceed_frac[0.1]:11.3f}")

# a three-letter observer on a user-supplied channel file
spec = resolve_channel(os.path.join(os.path.dirname(__file__), "leaky_ternary.json"))
rows = tv_convergence_profile(spec, np.array([0.2, 0.5, 0.3]), [10, 40, 160, 640], trials=400, seed=0)
print("\nobserver type convergence (leaky_ternary.json):")
for r in rows:
    print(f"n={r.n:4d}  E TV={r.mean_tv:.4f} +- {r.tv_std_err:.4f}  "
          f"P(TV>=0.05)={r.tv_exceed_frac[0.05]:.3f}")
