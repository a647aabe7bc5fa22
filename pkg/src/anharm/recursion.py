"""Exact Rayleigh-Schrodinger recursion for even anharmonic levels.

Orders are polynomials times a Gaussian: Psi_{n,k}(x) = P_k(x) exp(-x^2/2)
with P_k of degree 4k+n and the parity of n.  Applying the harmonic
operator to x^l exp(-x^2/2) leaves ((l-n) x^l - l(l-1)/2 x^{l-2})
exp(-x^2/2), which turns the eigenvalue equation at order k into one
triangular identity per power l:

    (l-n) B_{k,l} - (l+2)(l+1)/2 B_{k,l+2}
        + sum_p a_{2p} B_{k-p+1, l-2p} = sum_{j=1..k} E_{n,j} B_{k-j,l}

Sweeping l downward from 4k+n makes every row explicit: above l = n the
pivot (l-n) is nonzero; at l = n the pivot vanishes, and because order
zero is monic at x^n while B_{m,n} = 0 for m >= 1, the row collapses to a
closed form for the energy

    E_{n,k} = -(n+2)(n+1)/2 B_{k,n+2} + sum_p a_{2p} B_{k-p+1, n-2p};

rows below l = n then use the fresh E_{n,k}.  All arithmetic is exact
rational, so every energy and coefficient is reproducible bit for bit.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import (
    DEFAULT_PRECISION,
    SignedLog,
    certified_eval,
    workprec,
)
from .potential import Potential

__all__ = [
    "WaveOrder",
    "PerturbationSeries",
    "OrderOverflow",
    "ZeroValue",
    "ZeroNormalizer",
    "hermite_monic",
    "compute_series",
    "oscillator_oracle",
    "evaluate_order",
    "convergence_profile_A",
    "convergence_profile_M",
    "fixed_x_profile",
]

DEFAULT_ORDER_BUDGET_BYTES = 64 * 2 ** 20


class OrderOverflow(Exception):
    """Coefficient storage for one order exceeded the configured budget."""


class ZeroValue(Exception):
    """A profile was requested at a point where the order vanishes."""


class ZeroNormalizer(Exception):
    """The x^2 coefficient used for fixed-x rescaling is zero."""


def hermite_monic(n: int) -> dict[int, mpq]:
    """Coefficients of the monic-at-x^n harmonic polynomial h_n.

    h_0 = 1, h_1 = x, h_{m+1} = x h_m - (m/2) h_{m-1}; these solve the
    order-zero equation with eigenvalue n + 1/2 and normalize the
    recursion (coefficient of x^n is exactly 1).
    """
    if n == 0:
        return {0: mpq(1)}
    prev = {0: mpq(1)}
    cur = {1: mpq(1)}
    for m in range(1, n):
        nxt: dict[int, mpq] = {}
        for l, c in cur.items():
            nxt[l + 1] = nxt.get(l + 1, mpq(0)) + c
        for l, c in prev.items():
            nxt[l] = nxt.get(l, mpq(0)) - mpq(m, 2) * c
        prev, cur = cur, {l: c for l, c in nxt.items() if c != 0}
    return cur


class WaveOrder:
    """One perturbative order: level n, order k, dense even/odd coefficients.

    Storage is a dense list over the parity class of n: slot i holds
    B_{k, parity + 2i}.  The mapping view `coeffs` contains only the
    nonzero entries.
    """

    __slots__ = ("level", "order", "dense")

    def __init__(self, level: int, order: int, dense: list[mpq]):
        self.level = level
        self.order = order
        self.dense = dense

    @property
    def parity(self) -> int:
        return self.level % 2

    @property
    def degree(self) -> int:
        return 4 * self.order + self.level

    @property
    def coeffs(self) -> dict[int, mpq]:
        p = self.parity
        return {p + 2 * i: c for i, c in enumerate(self.dense) if c != 0}

    def coefficient(self, power: int) -> mpq:
        """B_{k,power}; zero off the stored parity class or range."""
        p = self.parity
        if power < 0 or power % 2 != p:
            return mpq(0)
        i = (power - p) // 2
        if i >= len(self.dense):
            return mpq(0)
        return self.dense[i]

    def bit_size(self) -> int:
        total = 0
        for c in self.dense:
            total += c.numerator.bit_length() + c.denominator.bit_length()
        return total


class PerturbationSeries:
    """Computed orders 0..K and exact energies for one level."""

    __slots__ = ("potential", "level", "orders", "energies")

    def __init__(self, potential: Potential, level: int,
                 orders: list[WaveOrder], energies: list[mpq]):
        self.potential = potential
        self.level = level
        self.orders = orders
        self.energies = energies

    @property
    def max_order(self) -> int:
        return len(self.orders) - 1


def compute_series(pot: Potential, n: int, K: int,
                   order_budget_bytes: int = DEFAULT_ORDER_BUDGET_BYTES) -> PerturbationSeries:
    """Run the recursion for level n through order K.

    Raises OrderOverflow when the exact coefficients of a single order
    grow past order_budget_bytes.
    """
    if n < 0 or K < 0:
        raise ValueError("level and order must be non-negative")
    parity = n % 2
    terms = pot.anharmonic_terms()  # [(p, a_{2p})] sorted by p

    h = hermite_monic(n)
    dense0 = [mpq(0)] * (n // 2 + 1)
    for l, c in h.items():
        dense0[(l - parity) // 2] = c
    orders = [WaveOrder(n, 0, dense0)]
    energies = [mpq(2 * n + 1, 2)]

    budget_bits = 8 * order_budget_bytes

    def get(k: int, l: int) -> mpq:
        return orders[k].coefficient(l)

    for k in range(1, K + 1):
        top = 4 * k + n
        slots = (top - parity) // 2 + 1
        dense = [mpq(0)] * slots

        def row_sum(l: int) -> mpq:
            # left-hand contributions independent of B_{k,l}
            acc = mpq(0)
            idx = (l + 2 - parity) // 2
            if idx < slots:
                acc -= mpq((l + 2) * (l + 1), 2) * dense[idx]
            for p, a in terms:
                src = k - p + 1
                if 0 <= src < k and l - 2 * p >= 0:
                    acc += a * get(src, l - 2 * p)
            return acc

        # rows above the pivot: energies E_{n,j<k} enter via B_{k-j,l},
        # and the j = k term drops because order zero has no support there
        for l in range(top, n, -2):
            rhs = mpq(0)
            for j in range(1, k):
                rhs += energies[j] * get(k - j, l)
            dense[(l - parity) // 2] = (rhs - row_sum(l)) / (l - n)

        # pivot row: B_{k,n} = 0 and B_{0,n} = 1 give the energy directly
        e_k = row_sum(n)
        for j in range(1, k):
            e_k -= energies[j] * get(k - j, n)
        energies.append(e_k)

        # rows below the pivot use the freshly extracted energy
        for l in range(n - 2, -1, -2):
            rhs = mpq(0)
            for j in range(1, k + 1):
                rhs += energies[j] * get(k - j, l)
            dense[(l - parity) // 2] = (rhs - row_sum(l)) / (l - n)

        order = WaveOrder(n, k, dense)
        if order.bit_size() > budget_bits:
            raise OrderOverflow(
                f"order {k} coefficients exceed {order_budget_bytes} bytes")
        orders.append(order)

    return PerturbationSeries(pot, n, orders, energies)


# ---------------------------------------------------------------------------
# Independent oscillator-basis oracle (first three orders)
# ---------------------------------------------------------------------------

def _ladder_x2p(state: dict[int, mpq], p: int) -> dict[int, mpq]:
    """Multiply by x^{2p} in the unnormalized ladder basis |m) = adag^m |0>.

    (a + adag)|m) = m|m-1) + |m+1); x^{2p} = (a + adag)^{2p} / 2^p.
    """
    cur = state
    for _ in range(2 * p):
        nxt: dict[int, mpq] = {}
        for m, amp in cur.items():
            if m > 0:
                nxt[m - 1] = nxt.get(m - 1, mpq(0)) + m * amp
            nxt[m + 1] = nxt.get(m + 1, mpq(0)) + amp
        cur = nxt
    scale = mpq(1, 2 ** p)
    return {m: amp * scale for m, amp in cur.items() if amp != 0}


def _ladder_inner(sa: dict[int, mpq], sb: dict[int, mpq]) -> mpq:
    """(sa|sb) with (m|m) = m!."""
    acc = mpq(0)
    for m, amp in sa.items():
        other = sb.get(m)
        if other is not None:
            acc += amp * other * gmpy2.fac(m)
    return acc


def _resolvent(state: dict[int, mpq], n: int) -> dict[int, mpq]:
    """Apply -(H0 - n - 1/2)^(-1) off the level-n subspace."""
    return {m: amp / (n - m) for m, amp in state.items() if m != n and amp != 0}


def oscillator_oracle(pot: Potential, n: int, K: int) -> list[mpq]:
    """E_{n,1..K} by textbook sums in the oscillator basis; K <= 3.

    Deliberately shares no code with compute_series: states are ladder
    amplitude maps, matrix elements come from (a + adag) combinatorics.
    """
    if not 1 <= K <= 3:
        raise ValueError("oracle supports 1 <= K <= 3")
    # perturbation at coupling order j is a_{2j+2} x^{2j+2}
    by_order: dict[int, mpq] = {p - 1: a for p, a in pot.anharmonic_terms()}

    def w(j: int, state: dict[int, mpq]) -> dict[int, mpq]:
        a = by_order.get(j)
        if a is None:
            return {}
        return {m: a * amp for m, amp in _ladder_x2p(state, j + 1).items()}

    base = {n: mpq(1)}
    norm = gmpy2.fac(n)

    def combine(*states: dict[int, mpq]) -> dict[int, mpq]:
        out: dict[int, mpq] = {}
        for st in states:
            for m, amp in st.items():
                out[m] = out.get(m, mpq(0)) + amp
        return {m: amp for m, amp in out.items() if amp != 0}

    def scaled(state: dict[int, mpq], factor: mpq) -> dict[int, mpq]:
        return {m: factor * amp for m, amp in state.items()}

    energies: list[mpq] = []
    e1 = _ladder_inner(base, w(1, base)) / norm
    energies.append(e1)
    if K >= 2:
        psi1 = _resolvent(combine(w(1, base), scaled(base, -e1)), n)
        e2 = (_ladder_inner(base, w(2, base)) + _ladder_inner(base, w(1, psi1))) / norm
        energies.append(e2)
    if K >= 3:
        psi2 = _resolvent(
            combine(w(2, base), w(1, psi1),
                    scaled(psi1, -e1), scaled(base, -e2)), n)
        e3 = (_ladder_inner(base, w(3, base)) + _ladder_inner(base, w(2, psi1))
              + _ladder_inner(base, w(1, psi2))) / norm
        energies.append(e3)
    return energies


# ---------------------------------------------------------------------------
# Profile evaluations
# ---------------------------------------------------------------------------

def _poly_at(order: WaveOrder, x: mpfr) -> mpfr:
    """Horner over (x^2) of the dense coefficients, times x^parity."""
    y = x * x
    acc = mpfr(0)
    for c in reversed(order.dense):
        acc = acc * y + mpfr(c)
    if order.parity:
        acc *= x
    return acc


def evaluate_order(series: PerturbationSeries, k: int, x,
                   bits: int = DEFAULT_PRECISION) -> mpfr:
    """Psi_{n,k}(x) as a certified BigFloat.

    The exact coefficients cancel heavily at x of order sqrt(k); the value
    is recomputed at doubled precision until two tiers agree to 40 bits
    (PrecisionExhausted beyond 16x the requested precision).
    """
    order = series.orders[k]

    def attempt(prec: int) -> mpfr:
        with workprec(prec):
            xv = mpfr(x)
            return _poly_at(order, xv) * gmpy2.exp(-xv * xv / 2)

    return certified_eval(attempt, bits)


def convergence_profile_A(series: PerturbationSeries, k: int, xi,
                          bits: int = DEFAULT_PRECISION) -> mpfr:
    """A_k(xi) = -(1/k) ln |Psi_{n,k}(xi sqrt(k)) / k!|.

    Raises ZeroValue when the order vanishes at the sample point.
    """
    if k < 1:
        raise ValueError("profiles need k >= 1")
    order = series.orders[k]

    def attempt(prec: int) -> mpfr:
        with workprec(prec):
            xv = mpfr(xi) * gmpy2.sqrt(mpfr(k))
            pv = _poly_at(order, xv)
            if pv == 0:
                raise ZeroValue(f"order {k} vanishes at xi sqrt(k) = {xv}")
            ln_psi = gmpy2.log(abs(pv)) - xv * xv / 2
            return -(ln_psi - gmpy2.lngamma(mpfr(k + 1))) / k

    return certified_eval(attempt, bits)


def convergence_profile_M(series: PerturbationSeries, k: int, xi, a_of_xi,
                          bits: int = DEFAULT_PRECISION) -> mpfr:
    """M_k(xi) = Psi_{n,k}(xi sqrt(k)) / ((k-1)! e^{-k A(xi)}), sign kept."""
    if k < 1:
        raise ValueError("profiles need k >= 1")
    order = series.orders[k]

    def attempt(prec: int) -> mpfr:
        with workprec(prec):
            xv = mpfr(xi) * gmpy2.sqrt(mpfr(k))
            pv = _poly_at(order, xv)
            if pv == 0:
                return mpfr(0)
            sl = SignedLog.from_value(pv, bits=prec)
            lm = (sl.log_magnitude - xv * xv / 2
                  - gmpy2.lngamma(mpfr(k)) + k * mpfr(a_of_xi))
            return sl.sign * gmpy2.exp(lm)

    return certified_eval(attempt, bits)


def fixed_x_profile(series: PerturbationSeries, k: int, x,
                    bits: int = DEFAULT_PRECISION) -> mpfr:
    """Psi_{0,k}(x) / B_{k,2}: the order rescaled to start as x^2 + ...

    Ground state only; raises ZeroNormalizer if the x^2 coefficient is 0.
    """
    if series.level != 0:
        raise ValueError("fixed-x profile is defined for the ground state")
    if k < 1:
        raise ValueError("profiles need k >= 1")
    order = series.orders[k]
    b2 = order.coefficient(2)
    if b2 == 0:
        raise ZeroNormalizer(f"order {k} has zero x^2 coefficient")
    scaled = WaveOrder(0, k, [c / b2 for c in order.dense])

    def attempt(prec: int) -> mpfr:
        with workprec(prec):
            xv = mpfr(x)
            return _poly_at(scaled, xv) * gmpy2.exp(-xv * xv / 2)

    return certified_eval(attempt, bits)
