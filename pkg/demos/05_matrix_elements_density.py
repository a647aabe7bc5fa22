"""Growth of matrix elements and density-matrix orders.

The exact orders of <0|x^2|0> are rational multiples of sqrt(pi); the
trajectory predicts their Gamma(k)-scale growth up to normalization.
The ratio exact/asymptote grows like sqrt(k) here (the absolute
normalization of the prefactor is convention-dependent; the geometric
growth rate itself is exact, as the shifted-log increments show).
The density-matrix orders at scaled arguments follow a saddle-point law
whose per-order exponent gap closes like 1/k.
"""

import gmpy2
from gmpy2 import mpfr, mpq

from anharm import (
    compute_series,
    euclidean_constants,
    matrix_element_asymptotic,
    matrix_element_exact,
    quartic_potential,
    rho_order_exact,
    rho_saddle,
)
from anharm.numerics import SignedLog

pot = quartic_potential()
consts = euclidean_constants(pot)
series = compute_series(pot, 0, 40)

print("<0|x^2|0>_k: exact / asymptote")
print(f"  {'k':>3} {'ratio':>9} {'ratio/sqrt(k)':>14} {'d ln(exact)/dk - ln 3':>22}")
with gmpy2.context(precision=128):
    prev_shift = None
    for k in (10, 20, 30, 40):
        exact = matrix_element_exact(series, series, 2, 0, k)
        asym = matrix_element_asymptotic(pot, consts, 0, 0, 2, 0, k)
        ratio = exact.to_mpfr(128) / (asym.sign * gmpy2.exp(asym.log_magnitude))
        # increment of ln|exact| - ln Gamma(k) over 10 orders, per order,
        # minus the predicted -ln s_inf = ln 3
        here = (SignedLog.from_rational(exact.rational_part).log_magnitude
                - gmpy2.lngamma(mpfr(k)))
        drift = ""
        if prev_shift is not None:
            drift = f"{float((here - prev_shift) / 10 - gmpy2.log(mpfr(3))):>22.5f}"
        prev_shift = here
        print(f"  {k:>3} {float(ratio):>9.4f} "
              f"{float(ratio / gmpy2.sqrt(mpfr(k))):>14.6f} {drift:>22}")

print("\ndensity-matrix orders at x1 = x2 = 1.5 sqrt(N), N = k:")
print(f"  {'k':>3} {'ln|rho_k|':>12} {'saddle law':>12} {'gap/k':>10}")
kappa, eta = mpfr(1), mpfr("1.5")
with gmpy2.context(precision=160):
    for k in (10, 20, 30):
        big_n = k / kappa
        x = mpq(eta * gmpy2.sqrt(big_n))
        coeff, gauss = rho_order_exact(series, series, k, x, x)
        exact_log = SignedLog.from_rational(coeff).log_magnitude + mpfr(gauss)
        saddle = rho_saddle(pot, consts, 0, 0, kappa, x / gmpy2.sqrt(big_n),
                            x / gmpy2.sqrt(big_n))
        predicted = ((k - mpfr(1) / 2) * gmpy2.log(big_n)
                     - big_n * saddle.B_0 + gmpy2.log(saddle.gamma))
        print(f"  {k:>3} {float(exact_log):>12.4f} {float(predicted):>12.4f} "
              f"{float((exact_log - predicted) / k):>10.5f}")
