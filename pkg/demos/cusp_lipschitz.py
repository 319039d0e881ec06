"""A cusp-shaped inclusion.

D = {x2 < -x1^2} inside the unit ball has a degenerate tangent at the
origin, yet the gradient estimate holds whatever the regularity of the
interface.  We watch the Lipschitz ratio while refining and look at how the
density of D behaves at the apex compared with a point on the smooth part.
"""

import numpy as np

from translab import CoefficientTensor, Cusp, Grid, TransmissionProblem, rescaled_density, solve_transmission
from translab.regularity import lipschitz_ratio

D = Cusp(0.5)
p = TransmissionProblem(CoefficientTensor.isotropic(2, 1, 1.0), CoefficientTensor.isotropic(2, 1, 4.0), D,
                        boundary=lambda x: x[:, 1].copy(), label="cusp")

prev = None
for N in (32, 64, 128, 256):
    lr = lipschitz_ratio(p, solve_transmission(p, Grid(2, N)))
    growth = "" if prev is None else f"  x{lr.ratio / prev:.3f}"
    print(f"N={N:4d}  ratio {lr.ratio:.4f}  sup|grad u| {lr.sup_grad:.4f}{growth}")
    prev = lr.ratio

print("\nrescaled density |D_{z,r}|  (half-space value pi/2 = 1.5708)")
for z in [(0.0, 0.0), (0.5, -0.25)]:
    vals = [rescaled_density(D, z, r) for r in 0.25 / 2.0 ** np.arange(5)]
    print(f"z={z}: " + "  ".join(f"{v:.4f}" for v in vals))
