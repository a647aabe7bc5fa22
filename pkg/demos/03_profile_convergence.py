"""Convergence of the rescaled orders to their trajectory limits.

Sampling order k at x = xi sqrt(k) compresses all orders onto one
profile: A_k(xi) = -(1/k) ln |Psi_k / k!| tends to the bounce exponent
A(xi), and the remaining prefactor M_k(xi) tends to a k-free amplitude
M(xi). The exponent converges slowly (the gap carries a log k / k
tail); the prefactor settles much faster.
"""

from gmpy2 import mpfr

from anharm import (
    compute_series,
    convergence_profile_A,
    convergence_profile_M,
    euclidean_constants,
    exponent_A,
    prefactor_M,
    quartic_potential,
)

pot = quartic_potential()
consts = euclidean_constants(pot)
series = compute_series(pot, 0, 40)
orders = (5, 10, 20, 40)

print("decay exponent: gap A_k(xi) - A(xi)")
print(f"  {'xi':>5} {'A(xi)':>10}" + "".join(f" {'k=' + str(k):>10}" for k in orders))
for xi in (mpfr("0.75"), mpfr(1), mpfr("1.5"), mpfr(2)):
    a_ref = exponent_A(pot, consts, xi)
    gaps = [convergence_profile_A(series, k, xi) - a_ref for k in orders]
    print(f"  {float(xi):>5.2f} {float(a_ref):>10.5f}"
          + "".join(f" {float(g):>10.5f}" for g in gaps))

print("\nprefactor: ratio M_k(xi) / M(xi)")
print(f"  {'xi':>5} {'M(xi)':>10}" + "".join(f" {'k=' + str(k):>10}" for k in orders))
for xi in (mpfr(1), mpfr("1.5"), mpfr(2)):
    a_ref = exponent_A(pot, consts, xi)
    m_ref = prefactor_M(pot, consts, xi)
    ratios = [convergence_profile_M(series, k, xi, a_ref) / m_ref for k in orders]
    print(f"  {float(xi):>5.2f} {float(m_ref):>10.6f}"
          + "".join(f" {float(r):>10.6f}" for r in ratios))
