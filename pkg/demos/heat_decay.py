"""Heat flow of a single eigenmode, then the parabolic harness on the result.

sin(pi x1) sin(pi x2) decays like exp(-2 pi^2 t).  Crank-Nicolson recovers the
rate to a fraction of a percent; backward Euler is more diffusive but never
increases the energy.
"""

import math

import numpy as np

from translab import CoefficientTensor, Empty, Grid, TransmissionProblem, solve_parabolic
from translab.fem import mass_matrix
from translab.oracle import eigenmode_decay
from translab.regularity import holder_time_exponent, parabolic_affine_fit

A = CoefficientTensor.isotropic(2, 1, 1.0)
p = TransmissionProblem(A, A, Empty(), boundary=lambda x, t: np.zeros(len(x)))
mode = lambda x: eigenmode_decay(2, (1, 1), x, 0.0)[0]  # noqa: E731
g = Grid(2, 32)
M = mass_matrix(g)

for scheme in ("crank-nicolson", "backward-euler"):
    f = solve_parabolic(p, g, dt=1e-4, scheme=scheme, initial=mode, t0=-0.1, t_end=0.0)
    nrm = [math.sqrt(v.ravel() @ (M @ v.ravel())) for v in f.values]
    rate = -np.polyfit(f.times, np.log(nrm), 1)[0]
    print(f"{scheme:<15} rate {rate:.4f}  (2 pi^2 = {2 * math.pi ** 2:.4f})  "
          f"{f.stats['steps']} steps, {f.stats['iterations']} CG iterations")

# parabolic affine fit on the last run
for r in (0.25, 0.125):
    fit = parabolic_affine_fit(f, (0.3, 0.2, 0.0), r, min_cells=1)
    print(f"r={r}: grad {np.round(fit.gradient[0], 4)}, sup_t residual {fit.sup_t_residual:.3e}")

h = holder_time_exponent(f, [((0.3, 0.2, 0.0), (0.0, 0.0, -0.05))], probe=((0.3, 0.2), 0.0))
print(f"time exponent {h.exponent:.3f}, d_p ratio {h.ratios[0]:.3f}")
