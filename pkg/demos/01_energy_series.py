"""Exact energy orders for the quartic reference and their factorial growth.

The perturbative energies E_{0,k} of V = x^2/2 - x^4 are rational and
alternate-free: every order past the zeroth is negative, and the ratio
E_k / E_{k-1} approaches 3k, the signature of a series growing like
3^k k! (radius of convergence zero).
"""

import gmpy2
from gmpy2 import mpfr

from anharm import compute_series, quartic_potential

pot = quartic_potential()
series = compute_series(pot, 0, 40)

print("low orders, exactly:")
for k in range(6):
    print(f"  E_0,{k} = {series.energies[k]}")

print("\ngrowth of the ratio E_k / E_(k-1) against 3k:")
print(f"  {'k':>3} {'ratio':>14} {'ratio / 3k':>12}")
with gmpy2.context(precision=128):
    for k in (5, 10, 20, 30, 40):
        ratio = mpfr(series.energies[k] / series.energies[k - 1])
        print(f"  {k:>3} {float(ratio):>14.4f} {float(ratio / (3 * k)):>12.6f}")

print("\nthe leading wave-function coefficient is (1/4)^k / k!:")
for k in (1, 2, 3, 10):
    lead = series.orders[k].coefficient(4 * k)
    print(f"  B_({k},{4 * k}) = {lead}")
