"""The fixed-argument limit of the normalized ground-level orders.

At fixed x (no rescaling with k) the orders themselves converge once
normalized by their x^2 coefficient: X_{0,k}(x) = Psi_{0,k}(x) / B_{k,2}
tends to a k-free shape X^_0(x) = x^2 - x^4/6 + ..., expressible through
Gaussian-weighted error-function integrals. The approach is monotone
but slow near the right edge of the window.
"""

from gmpy2 import mpfr

from anharm import (
    build_ladder,
    compute_series,
    eval_ladder_normalized,
    fixed_x_profile,
    quartic_potential,
)

pot = quartic_potential()
series = compute_series(pot, 0, 40)
ladder = build_ladder(0)
orders = (5, 10, 20, 40)

print(f"  {'x':>4} {'limit':>10}" + "".join(f" {'k=' + str(k):>10}" for k in orders)
      + f" {'|gap40|':>9}")
for ix in range(1, 9):
    x = mpfr(ix) / 4
    ref = eval_ladder_normalized(ladder, x)
    vals = [fixed_x_profile(series, k, x) for k in orders]
    print(f"  {float(x):>4.2f} {float(ref):>10.6f}"
          + "".join(f" {float(v):>10.6f}" for v in vals)
          + f" {float(abs(vals[-1] - ref)):>9.1e}")

# the limit starts exactly as x^2
x = mpfr("1e-4")
lead = eval_ladder_normalized(ladder, x) / (x * x)
print(f"\nx^2 coefficient of the limit shape: {float(lead):.10f}")
