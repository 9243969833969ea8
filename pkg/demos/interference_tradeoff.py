"""
Rate versus interference shape on a single link
===============================================

A binary input drives the intended receiver through one channel and leaks to
an observer through another. Fixing the type the observer sees restricts the
input distribution to a polytope; the best rate is the largest mutual
information on it.
"""

import numpy as np

from ictk import (
    PreimagePolytope,
    SingleUserChannel,
    capacity_curve,
    enumerate_vertices,
    unconstrained_capacity,
)

# intended link: BSC(0.1); leakage: a noisier, asymmetric channel
wy = np.array([[0.9, 0.1], [0.1, 0.9]])
wz = np.array([[0.8, 0.2], [0.3, 0.7]])
ch = SingleUserChannel(wy, wz)

print("unconstrained capacity:", unconstrained_capacity(wy).rate)

# the observer can only see P(z=0) between 0.3 and 0.8
targets = [[t, 1 - t] for t in np.linspace(0.25, 0.85, 13)]
print(f"{'P(z=0)':>8} {'rate':>10}  input")
for g, res in capacity_curve(ch, targets):
    if res.feasible:
        print(f"{g[0]:8.3f} {res.rate:10.6f}  {np.round(res.optimizer, 4)}")
    else:
        print(f"{g[0]:8.3f} {'--':>10}  infeasible")

# with three inputs the pre-image is a segment rather than a point
wy3 = np.array([[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]])
wz3 = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
poly = PreimagePolytope(wz3, [0.5, 0.5])
print("\nvertices of {P_X : P_X W_Z = (0.5, 0.5)}:")
print(enumerate_vertices(poly).vertices)
_, res = capacity_curve(SingleUserChannel(wy3, wz3), [[0.5, 0.5]])[0]
print("best input on the segment:", np.round(res.optimizer, 6), "rate", res.rate)
