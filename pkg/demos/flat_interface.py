"""Flat interface: the discrete solution is exact when the jump sits on grid lines.

With a = 1 below x2 = 0 and b = 4 above, u = x2 below and x2/4 above.  Q1
elements reproduce piecewise-linear data that kinks along a grid line, so
the nodal error is at the solver tolerance.
"""

import math

import numpy as np

from translab import CoefficientTensor, Grid, HalfSpace, TransmissionProblem, solve_transmission
from translab.oracle import flat_interface
from translab.regularity import bmo_profile, lipschitz_ratio

a, b = 1.0, 4.0
p = TransmissionProblem(CoefficientTensor.isotropic(2, 1, a), CoefficientTensor.isotropic(2, 1, b),
                        HalfSpace((0.0, 1.0)), boundary=lambda x: flat_interface(a, b, x)[0], label="flat")

for N in (16, 32, 64, 128):
    g = Grid(2, N)
    u = solve_transmission(p, g)
    err = np.abs(u.values[0] - flat_interface(a, b, g.nodes)[0]).max()
    print(f"N={N:4d}  max nodal error {err:.2e}")

# The gradient jumps from (0, 1) to (0, 1/4).  Over a ball centred on the
# interface half the cells see each value, so the mean oscillation is the
# variance of a two-point distribution: pi * (3/8)^2 at every scale.
rep = bmo_profile(u, (0.0, 0.0), 0.25, 4, min_cells=1)
print("\nr        C_r")
for r, c in zip(rep.scales, rep.bmo):
    print(f"{r:<8g} {c:.6f}")
print(f"expected {math.pi * (3 / 8) ** 2:.6f}")

lr = lipschitz_ratio(p, u)
print(f"\nsup |grad u| on B_1/2 = {lr.sup_grad:.4f}, ||u||_L2 = {lr.norm_L2:.4f}, "
      f"sup_D |grad u| = {lr.norm_lipD:.4f}, ratio {lr.ratio:.4f}")
