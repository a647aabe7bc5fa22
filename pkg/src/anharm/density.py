"""Density-matrix orders, their saddle asymptotics, and matrix elements.

The k-th perturbative order of the two-point density object for a pair of
levels is the convolution

    rho_k(x1, x2) = sum_{m=0}^{k} Psi_{n1,m}(x1) Psi_{n2,k-m}(x2),

a polynomial with exact rational coefficients times the common factor
exp(-(x1^2 + x2^2)/2).  Under the scaling x_i = sqrt(N) eta_i, k = N kappa
the sum localizes at large N on one split of the order k between the two
factors, described by a pair of trajectory times and a Lagrange parameter:

    kappa = (lambda(tau_1) + lambda(tau_2)) e^{-p_kappa},
    eta_i = Q(tau_i) e^{-p_kappa / 2},

and rho_k ~ N^{k + (n1+n2-1)/2} e^{-N B_0} gamma with B_0 and gamma read
off the trajectory data at the split.  Candidate saddles differ only in
the branch assignment of the two times (rising/rising, rising/falling,
falling/rising); a genuine minimum of the split exponent has

    D = Qdot_1 Jt_2 + Qdot_2 Jt_1 > 0,   Jt = Q lambda_dot / 2 - lambda Qdot,

which is the sign of the second derivative B''.  Coinciding arguments
admit closed forms: a symmetric rising-branch split (region "a") or a
degenerate mirror pair tau_1 <-> tau_2 with equal Q (region "b").  The
region-b prefactor here is the two-minima closed form, whose absolute
normalization differs from the sum of the two generic saddle
contributions by the constant factor 1/sqrt(2 pi s_inf); the cross-check
test asserts that exact relation instead of hiding the convention.

Matrix elements <n2| x^{m1} (-d/dx)^{m2} |n1>_k of the unnormalized
states are exact Gaussian-moment sums, always a rational multiple of
sqrt(pi).  Their large-k growth is

    Gamma(k) / (pi s_inf^k) * (k/s_inf)^{(n1+n2+m1+m2)/2} * c^{n2+1/2} * I,

with I the convergent trajectory integral of Q^{m1} P^{m2} e^{(n1-n2)tau}.
The states carry no norm division, so the absolute constant relating this
growth law to the exact sums is convention-dependent; ratio trends are the
meaningful check, and the tests treat them that way.  The same formula
with Q^{m1}(tau) replaced by a product of shifted factors Q(tau + tau_i)
covers time-ordered euclidean correlators.
"""

from __future__ import annotations

from bisect import bisect_left
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr, mpq

from .euclidean import FALLING, RISING, EuclideanConstants, point_of
from .numerics import (
    SignedLog,
    find_root_bracketed,
    integrate_regularized,
    workprec,
)
from .potential import Potential
from .recursion import PerturbationSeries, WaveOrder

__all__ = [
    "NoSaddle",
    "BoundaryRegion",
    "Divergent",
    "DensitySaddle",
    "ExactGaussianValue",
    "rho_order_exact",
    "rho_saddle",
    "rho_diagonal_asymptotic",
    "matrix_element_exact",
    "matrix_element_asymptotic",
    "green_function_asymptotic",
]

_GUARD_BITS = 32

# Branch assignments for (tau_1, tau_2); falling/falling always has
# B'' < 0 (both Qdot < 0 against positive Jt), so it is never a minimum.
_ASSIGNMENTS = ((RISING, RISING), (RISING, FALLING), (FALLING, RISING))

_SCAN_STEP = mpfr("0.5")
_SCAN_CAP = 400
# stop the p-scan once both Q have dropped this far below the turning
# point; past it the rising-branch contribution is dead and the falling
# one is monotone, so no further sign change can appear
_Q_FLOOR_FACTOR = mpfr("1e-13")


class NoSaddle(Exception):
    """No branch assignment produced a minimum within the search window."""


class BoundaryRegion(Exception):
    """Diagonal argument falls in the crossover band between the two
    closed-form regimes, where both prefactors degenerate."""


class Divergent(Exception):
    """The trajectory integral diverges for these exponents."""


class DensitySaddle:
    """Localization data for the dominant split of one density order."""

    __slots__ = ("p_kappa", "tau_1", "tau_2", "B_0", "B_second", "gamma",
                 "degenerate_pair")

    def __init__(self, p_kappa, tau_1, tau_2, B_0, B_second, gamma,
                 degenerate_pair: bool):
        self.p_kappa = p_kappa
        self.tau_1 = tau_1
        self.tau_2 = tau_2
        self.B_0 = B_0
        self.B_second = B_second
        self.gamma = gamma
        self.degenerate_pair = degenerate_pair

    def __repr__(self) -> str:
        return (f"DensitySaddle(p_kappa={self.p_kappa}, tau_1={self.tau_1}, "
                f"tau_2={self.tau_2}, B_0={self.B_0}, "
                f"degenerate_pair={self.degenerate_pair})")


class ExactGaussianValue:
    """Exact value r*sqrt(pi); only the rational r is ever stored."""

    __slots__ = ("rational_part",)

    def __init__(self, rational_part):
        self.rational_part = mpq(rational_part)

    def to_mpfr(self, bits: int = 53) -> mpfr:
        with workprec(bits):
            return self.rational_part * gmpy2.sqrt(gmpy2.const_pi())

    def __repr__(self) -> str:
        return f"ExactGaussianValue({self.rational_part})"

    def __str__(self) -> str:
        return f"{self.rational_part}*sqrt(pi)"


# ---------------------------------------------------------------------------
# Exact convolution orders


def _poly_value(order: WaveOrder, x: mpq) -> mpq:
    """Exact value of the polynomial part of one order at rational x."""
    acc = mpq(0)
    xx = x * x
    for c in reversed(order.dense):
        acc = acc * xx + c
    if order.parity:
        acc *= x
    return acc


def rho_order_exact(series1: PerturbationSeries, series2: PerturbationSeries,
                    k: int, x1, x2) -> tuple[mpq, mpq]:
    """Exact convolution order rho_k(x1, x2) at rational arguments.

    Returns (coefficient, gauss_exponent): the rational coefficient and
    the exponent of the common factor e^{gauss_exponent}, which is always
    -(x1^2 + x2^2)/2.  No rounding anywhere.
    """
    if k < 0:
        raise ValueError("order k must be non-negative")
    if series1.max_order < k or series2.max_order < k:
        raise ValueError(f"both series must be computed through order {k}")
    x1 = mpq(x1)
    x2 = mpq(x2)
    left = [_poly_value(series1.orders[m], x1) for m in range(k + 1)]
    right = [_poly_value(series2.orders[m], x2) for m in range(k + 1)]
    coeff = mpq(0)
    for m in range(k + 1):
        coeff += left[m] * right[k - m]
    return coeff, -(x1 * x1 + x2 * x2) / 2


# ---------------------------------------------------------------------------
# Saddle of the convolution at scaled arguments


def _split_half(pot, consts, eta, branch, p):
    """Trajectory point with Q = eta * e^{p/2}, clamped at the turn."""
    q = eta * gmpy2.exp(p / 2)
    if q > consts.q_plus:
        q = consts.q_plus
    return point_of(pot, consts, by_Q=(q, branch))


def _jt(point) -> mpfr:
    return point.Q * point.lambda_dot / 2 - point.lam * point.P


def _assemble_saddle(n1, n2, kappa, p, pt1, pt2):
    """Build the saddle record at a solved p; None when not a minimum."""
    jt1 = _jt(pt1)
    jt2 = _jt(pt2)
    if jt1 <= 0 or jt2 <= 0:
        return None
    d_val = pt1.P * jt2 + pt2.P * jt1
    b_second = gmpy2.exp(p) * d_val / (jt1 * jt2)
    if b_second <= 0:
        return None
    resid = abs((pt1.lam + pt2.lam) * gmpy2.exp(-p) - kappa)
    if resid > mpfr("1e-9") * (1 + kappa):
        return None
    b_0 = (pt1.s + pt2.s + (pt1.lam + pt2.lam) * p) * gmpy2.exp(-p)
    two_pi = 2 * gmpy2.const_pi()
    gamma = (gmpy2.exp(-(n1 + n2 - 1) * p / 2
                       + (n1 + mpq(1, 2)) * pt1.tau
                       + (n2 + mpq(1, 2)) * pt2.tau)
             / gmpy2.sqrt(two_pi * d_val))
    return DensitySaddle(p, pt1.tau, pt2.tau, b_0, b_second, gamma, False)


def _solve_assignment(pot, consts, n1, n2, kappa, eta1, eta2,
                      branches, p_max, wp):
    """All minima of one branch assignment found by a downward p-scan."""
    b1, b2 = branches

    def mismatch(p):
        pt1 = _split_half(pot, consts, eta1, b1, p)
        pt2 = _split_half(pot, consts, eta2, b2, p)
        return (pt1.lam + pt2.lam) * gmpy2.exp(-p) - kappa

    q_floor = consts.q_plus * _Q_FLOOR_FACTOR
    eta_big = max(eta1, eta2)
    found = []
    p_hi = p_max
    f_hi = mismatch(p_hi)
    for _ in range(_SCAN_CAP):
        p_lo = p_hi - _SCAN_STEP
        f_lo = mismatch(p_lo)
        if f_lo == 0 or (f_lo > 0) != (f_hi > 0):
            root = find_root_bracketed(mismatch, p_lo, p_hi,
                                       tol=gmpy2.exp2(24 - wp), bits=wp)
            pt1 = _split_half(pot, consts, eta1, b1, root)
            pt2 = _split_half(pot, consts, eta2, b2, root)
            sad = _assemble_saddle(n1, n2, kappa, root, pt1, pt2)
            if sad is not None:
                found.append(sad)
        p_hi, f_hi = p_lo, f_lo
        if eta_big * gmpy2.exp(p_hi / 2) < q_floor:
            break
    return found


def rho_saddle(pot: Potential, consts: EuclideanConstants,
               n1: int, n2: int, kappa, eta1, eta2) -> DensitySaddle:
    """Dominant split of the convolution at scaled arguments.

    Solves kappa = (lambda(tau_1) + lambda(tau_2)) e^{-p} with
    Q(tau_i) = eta_i e^{p/2} as a one-dimensional root problem in p for
    each branch assignment of the two times, keeps the solutions whose
    split exponent has a positive second derivative, and returns the one
    with the smallest exponent B_0.  degenerate_pair is set when a second
    distinct minimum ties B_0 (the mirror split, two equal minima).

    Raises NoSaddle when no assignment yields a minimum inside the
    scanned window of p.
    """
    if not (kappa > 0 and eta1 > 0 and eta2 > 0):
        raise ValueError("kappa, eta1 and eta2 must be positive")
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        kappa = mpfr(kappa)
        eta1 = mpfr(eta1)
        eta2 = mpfr(eta2)
        p_max = 2 * gmpy2.log(consts.q_plus / max(eta1, eta2))
        candidates = []
        for branches in _ASSIGNMENTS:
            candidates.extend(_solve_assignment(
                pot, consts, n1, n2, kappa, eta1, eta2, branches, p_max, wp))
        if not candidates:
            raise NoSaddle(
                f"no split minimum for kappa={kappa}, eta=({eta1}, {eta2})")
        candidates.sort(key=lambda s: s.B_0)
        best = candidates[0]
        tie = mpfr("1e-9") * (1 + abs(best.B_0))
        for other in candidates[1:]:
            if (abs(other.B_0 - best.B_0) <= tie
                    and abs(other.tau_1 - best.tau_1) > mpfr("1e-9")):
                best.degenerate_pair = True
                break
        return best


def rho_diagonal_asymptotic(pot: Potential, consts: EuclideanConstants,
                            n1: int, n2: int, kappa, eta):
    """Closed-form exponent and prefactor at coinciding arguments.

    Returns (region, B, gamma).  Region "a" (eta/sqrt(kappa) above
    Q_plus/sqrt(s_inf)) is the symmetric rising split, with tau fixed by
    eta/sqrt(kappa) = Q/sqrt(2 lambda).  Region "b" is the degenerate
    mirror split with Q fixed by eta/sqrt(kappa) = Q/sqrt(s_inf); its
    gamma includes both tied minima.  Inside a 1e-6 band around the
    crossover both forms degenerate and BoundaryRegion is raised instead
    of interpolating.
    """
    if not (kappa > 0 and eta > 0):
        raise ValueError("kappa and eta must be positive")
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        kappa = mpfr(kappa)
        eta = mpfr(eta)
        ratio = eta / gmpy2.sqrt(kappa)
        bound = consts.q_plus / gmpy2.sqrt(consts.s_infinity)
        if abs(ratio - bound) < mpfr("1e-6"):
            raise BoundaryRegion(
                f"eta/sqrt(kappa) = {ratio} within 1e-6 of the crossover "
                f"{bound}")
        half = mpq(n1 + n2 - 1, 2)
        if ratio > bound:
            pt = point_of(pot, consts, by_xi=gmpy2.sqrt(mpfr(2)) * ratio)
            b_val = kappa * (pt.s / pt.lam + gmpy2.log(2 * pt.lam / kappa))
            gamma = ((kappa / (2 * pt.lam)) ** half
                     * gmpy2.exp((n1 + n2 + 1) * pt.tau)
                     / gmpy2.sqrt(2 * gmpy2.const_pi())
                     / gmpy2.sqrt(2 * pt.P * _jt(pt)))
            return "a", b_val, gamma
        q_split = eta * gmpy2.sqrt(consts.s_infinity / kappa)
        pt = point_of(pot, consts, by_Q=(q_split, RISING))
        tau1 = pt.tau
        tau2 = 2 * consts.tau_turn - tau1
        b_val = kappa * (1 + gmpy2.log(consts.s_infinity / kappa))
        bracket = (gmpy2.exp((n1 + mpq(1, 2)) * tau1 + (n2 + mpq(1, 2)) * tau2)
                   + gmpy2.exp((n1 + mpq(1, 2)) * tau2
                               + (n2 + mpq(1, 2)) * tau1))
        gamma = ((kappa / consts.s_infinity) ** half * bracket
                 / (2 * gmpy2.const_pi() * consts.s_infinity * pt.P))
        return "b", b_val, gamma


# ---------------------------------------------------------------------------
# Exact matrix elements


@lru_cache(maxsize=None)
def _gaussian_moment(e: int) -> mpq:
    """int x^e e^{-x^2} dx / sqrt(pi) for even e: (e-1)!! / 2^(e/2)."""
    if e == 0:
        return mpq(1)
    return mpq(int(gmpy2.double_fac(e - 1)), 2 ** (e // 2))


def _lower_once(poly: dict[int, mpq]) -> dict[int, mpq]:
    """Apply -d/dx to poly(x) e^{-x^2/2}: the polynomial becomes x p - p'."""
    out: dict[int, mpq] = {}
    for e, c in poly.items():
        out[e + 1] = out.get(e + 1, mpq(0)) + c
        if e:
            out[e - 1] = out.get(e - 1, mpq(0)) - e * c
    return out


def matrix_element_exact(series1: PerturbationSeries,
                         series2: PerturbationSeries,
                         m1: int, m2: int, k: int) -> ExactGaussianValue:
    """<n2| x^{m1} (-d/dx)^{m2} |n1> at order k, exactly.

    series1 supplies the ket level n1, series2 the bra level n2; both are
    the unnormalized perturbative states.  Derivatives keep the
    polynomial-times-Gaussian form, products integrate term by term
    through the even moments of e^{-x^2}, so the result is a rational
    multiple of sqrt(pi) with no floating arithmetic.
    """
    if m1 < 0 or m2 < 0 or k < 0:
        raise ValueError("powers and order must be non-negative")
    if series1.max_order < k or series2.max_order < k:
        raise ValueError(f"both series must be computed through order {k}")
    total = mpq(0)
    for j in range(k + 1):
        ket = series1.orders[k - j].coeffs
        for _ in range(m2):
            ket = _lower_once(ket)
        bra = series2.orders[j].coeffs
        for eb, cb in bra.items():
            for ek, ck in ket.items():
                e = eb + m1 + ek
                if e % 2 == 0:
                    total += cb * ck * _gaussian_moment(e)
    return ExactGaussianValue(total)


# ---------------------------------------------------------------------------
# Large-order growth of matrix elements


def _require_even_total(n1, n2, m_total):
    if (m_total + n1 + n2) % 2:
        raise ValueError(
            "odd total insertion power: the exact value is zero and the "
            "growth formula does not apply")


def _require_convergent(n1, n2, m_total):
    """Both trajectory ends must damp the integrand."""
    eps_rise = m_total + n1 - n2
    eps_fall = m_total - n1 + n2
    if eps_rise <= 0 or eps_fall <= 0:
        raise Divergent(
            f"integrand exponents ({eps_rise}, {eps_fall}) must both be "
            "positive")
    return eps_rise, eps_fall


def _growth_value(consts, n1, n2, m_total, k, integral) -> SignedLog:
    """Assemble Gamma(k)/(pi s_inf^k) (k/s_inf)^{...} c^{n2+1/2} * I."""
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        if integral == 0:
            return SignedLog(0, mpfr("-inf"))
        log_s = gmpy2.log(consts.s_infinity)
        lm = (SignedLog.from_factorial(k - 1, bits=wp).log_magnitude
              - gmpy2.log(gmpy2.const_pi())
              - k * log_s
              + mpq(n1 + n2 + m_total, 2) * (gmpy2.log(mpfr(k)) - log_s)
              + (n2 + mpq(1, 2)) * gmpy2.log(consts.c)
              + gmpy2.log(abs(integral)))
        return SignedLog(1 if integral > 0 else -1, lm)


def matrix_element_asymptotic(pot: Potential, consts: EuclideanConstants,
                              n1: int, n2: int, m1: int, m2: int,
                              k: int) -> SignedLog:
    """Large-order growth of <n2| x^{m1} (-d/dx)^{m2} |n1>_k.

    The trajectory integral of Q^{m1} P^{m2} e^{(n1-n2) tau} is taken
    over both branches as a Q-quadrature with dtau = dQ / |P|.  Raises
    Divergent when an end exponent is non-positive and ValueError on an
    odd total (where the exact element vanishes identically).
    """
    if m1 < 0 or m2 < 0:
        raise ValueError("powers must be non-negative")
    if k < 1:
        raise ValueError("order k must be at least 1")
    _require_even_total(n1, n2, m1 + m2)
    _require_convergent(n1, n2, m1 + m2)
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        d = n1 - n2
        two_turn = 2 * consts.tau_turn

        def integrand(q):
            pt = point_of(pot, consts, by_Q=(q, RISING))
            rising = pt.P ** m2 * gmpy2.exp(d * pt.tau)
            falling = (-pt.P) ** m2 * gmpy2.exp(d * (two_turn - pt.tau))
            return q ** m1 * (rising + falling) / pt.P

        # the integrand is q^{eps-1} near the origin with eps >= 1, so the
        # neglected tail below the cutoff is O(2^-60), far under tolerance
        lo = consts.q_plus * gmpy2.exp2(-60)
        integral = integrate_regularized(integrand, lo, consts.q_plus,
                                         "inverse_sqrt_at_b",
                                         tol=gmpy2.exp2(-44), bits=wp)
    return _growth_value(consts, n1, n2, m1 + m2, k, integral)


@lru_cache(maxsize=8)
def _q_of_tau_table(pot: Potential, consts: EuclideanConstants):
    """Dense (tau, ln Q, d ln Q/dtau) table for fast shifted evaluations.

    The correlator quadrature needs Q(tau) thousands of times; inverting
    tau by root finding each time dominates the cost.  This builds one
    rising-branch table on a grid that is geometric in Q away from the
    turning point and uniform in sqrt(Q_plus - Q) near it, storing ln Q
    and its exact slope P/Q for cubic Hermite interpolation.  Keyed by
    object identity of the immutable inputs.
    """
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        qp = consts.q_plus
        qs: list[mpfr] = []
        n_geo = 2000
        log_lo = gmpy2.log(mpfr("1e-9"))
        for i in range(n_geo):
            qs.append(qp / 2 * gmpy2.exp(log_lo * (1 - mpfr(i) / n_geo)))
        n_turn = 600
        u_max = gmpy2.sqrt(qp / 2)
        for i in range(1, n_turn + 1):
            u = u_max * (n_turn - i) / n_turn
            qs.append(qp - u * u)
        taus = []
        logq = []
        slope = []
        for q in qs:
            pt = point_of(pot, consts, by_Q=(q, RISING))
            taus.append(pt.tau)
            logq.append(gmpy2.log(q))
            slope.append(pt.P / q)
        return tuple(taus), tuple(logq), tuple(slope)


def _q_at(table, two_turn, tau) -> mpfr:
    """Q(tau) on either branch from the rising-branch Hermite table."""
    taus, logq, slope = table
    t = tau if 2 * tau <= two_turn else two_turn - tau
    if t <= taus[0]:
        # below the table Q grows as e^tau to relative O(Q^2) ~ 1e-18
        return gmpy2.exp(logq[0] + (t - taus[0]))
    if t >= taus[-1]:
        return gmpy2.exp(logq[-1])
    i = bisect_left(taus, t) - 1
    h = taus[i + 1] - taus[i]
    w = (t - taus[i]) / h
    w2 = w * w
    a = logq[i]
    b = logq[i + 1]
    da = slope[i] * h
    db = slope[i + 1] * h
    val = (a * (1 + 2 * w) * (1 - w) ** 2 + b * w2 * (3 - 2 * w)
           + da * w * (1 - w) ** 2 - db * w2 * (1 - w))
    return gmpy2.exp(val)


def green_function_asymptotic(pot: Potential, consts: EuclideanConstants,
                              n1: int, n2: int, k: int, shifts) -> SignedLog:
    """Growth of the time-ordered correlator with insertions x(tau_i).

    Same growth law as matrix_element_asymptotic with m1 = len(shifts),
    m2 = 0, except that Q^{m1}(tau) becomes the product of shifted
    factors Q(tau + tau_i); the integral is then a direct tau-quadrature
    over a window wide enough that both exponential tails are dead.
    """
    if k < 1:
        raise ValueError("order k must be at least 1")
    shifts = tuple(shifts)
    m_total = len(shifts)
    _require_even_total(n1, n2, m_total)
    eps_rise, eps_fall = _require_convergent(n1, n2, m_total)
    table = _q_of_tau_table(pot, consts)
    wp = consts.bits + _GUARD_BITS
    with workprec(wp):
        offs = [mpfr(t) for t in shifts]
        d = n1 - n2
        two_turn = 2 * consts.tau_turn
        reach = max((abs(t) for t in offs), default=mpfr(0))
        margin = reach + abs(consts.tau_turn) + 4
        t_lo = -(mpfr(30) / eps_rise + margin)
        t_hi = mpfr(30) / eps_fall + margin

        def integrand(tau):
            prod = gmpy2.exp(d * tau)
            for t in offs:
                prod *= _q_at(table, two_turn, tau + t)
            return prod

        integral = integrate_regularized(integrand, t_lo, t_hi, "none",
                                         tol=gmpy2.exp2(-34), bits=wp)
    return _growth_value(consts, n1, n2, m_total, k, integral)
