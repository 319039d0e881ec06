"""Refinement study for a disk inclusion that does not align with the grid.

The coefficient is sampled at Gauss points, so cells cut by the circle see
a mix of phases.  That costs order but not convergence.
"""

from translab import Ball, CoefficientTensor, TransmissionProblem, refine_study
from translab.oracle import disk_inclusion

k, R = 2.0, 0.5
exact = lambda x: disk_inclusion(k, R, x)[0]  # noqa: E731
p = TransmissionProblem(CoefficientTensor.isotropic(2, 1, 1.0), CoefficientTensor.isotropic(2, 1, k),
                        Ball((0.0, 0.0), R), boundary=exact, label="disk")

table = refine_study(p, [16, 32, 64, 128], exact=exact)
print(f"{'h':>10} {'L2 error':>12} {'relative':>10} {'rate':>6}")
for row in table.rows():
    rate = f"{row['rate']:.2f}" if row["rate"] != "" else ""
    print(f"{row['h']:>10.5f} {row['l2_error']:>12.3e} {row['relative_error']:>10.2e} {rate:>6}")
print(f"least-squares order {table.fitted_rate:.2f}")

# without an oracle the finest solve becomes the reference
self_ref = refine_study(p, [16, 32, 64, 128])
print(f"against the N=128 solve: order {self_ref.fitted_rate:.2f}")
