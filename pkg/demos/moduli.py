"""Moduli of continuity: which ones are Dini, and how the verdict is reached.

The integral of omega(r)/r is taken decade by decade in s = -log r.  A
convergent integral shows increments shrinking geometrically; 1/log(e/r)
gives increments that flatten out.
"""

from translab import Modulus, dini_integral, lemma_a2_check, psi
from translab.modulus import check_rescaling

cases = {
    "r": Modulus.power(1.0),
    "2 sqrt(r)": Modulus.power(0.5, 2.0),
    "log(e/r)^-1": Modulus.log_power(1.0),
    "log(e/r)^-0.5": Modulus.log_power(0.5),
}

for name, m in cases.items():
    d = dini_integral(m)
    inc = " ".join(f"{v:.1e}" for v in d.increments[-4:])
    print(f"{name:<14} dini {d.value:10.5f}  {'Dini' if d.is_convergent else 'not Dini':<9} last decades: {inc}")

print(f"\npsi(r, rho=1/2, n=2) = {psi(Modulus.power(1.0), 0.5, 2):.6f}")
a2 = lemma_a2_check(Modulus.power(1.0), 3.0)
print(f"growth integral for r at alpha=3: {a2.value:.6f} ({'convergent' if a2.is_convergent else 'divergent'})")

# rescaling preconditions: omega(1) <= 1/2 for the elliptic iteration
for name, m in (("r", Modulus.power(1.0)), ("r/2", Modulus.power(1.0, 0.5))):
    ok, worst = check_rescaling(m)
    print(f"{name:<4} omega(1) <= 1/2: {ok} ({worst:g})")
