"""Fixed-argument profiles X_n and the plain large-order asymptote.

At fixed x the order-k wavefunctions approach a k-independent shape: with
F_k = c^{n+1/2}/(2 pi) k! k^{n-1/2} / s_inf^{k+n+1/2},

    Psi_{n,k}(x) ~ F_k X_n(x),        E_{n,k} ~ F_k CalE_n.

X_n solves the driven oscillator equation

    -X_n''/2 + x^2 X_n/2 - (n + 1/2) X_n = CalE_n Psi_{n,0}

and is built here in closed form.  Writing X_n = f_n e^{-x^2/2}, every f_n
lives in the ring of polynomials over {1, G, E} where

    G(x) = int_0^x e^{t^2} erf(t) dt,      E(x) = e^{x^2} erf(x),

which is closed under d/dx (G' = E, E' = 2xE + 2/sqrt(pi)).  The ground
profile is f_0 = 2G: parity forces Y' = 2E in -(Y' e^{-x^2})' = 2 CalE_0
e^{-x^2}, and the exact orders indeed approach +2 G e^{-x^2/2} F_k from
below.  Higher levels follow by the creation ladder
f_{n+1} = (2x f_n - f_n')/(n+1) plus a multiple of the order-0 polynomial
fixing the normalization (the x^n Taylor coefficient of f_n vanishes).
All ring coefficients are exact: q and r are rational and p is rational
times 1/sqrt(pi), so p is stored premultiplied by sqrt(pi).
"""

from functools import lru_cache

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import (DEFAULT_PRECISION, SignedLog, bigfloat, certified_eval,
                       erf_highprec, erfc_scaled, erfi_highprec,
                       integrate_regularized, workprec)
from .recursion import hermite_monic

# G is integrated directly up to this |x|; beyond it the integrand e^{t^2}
# erf(t) is split into e^{t^2} - e^{t^2} erfc(t), which integrate to erfi
# and a decaying scaled-complement tail.
_DIRECT_CUTOFF = 3


# ---------------------------------------------------------------------------
# sparse polynomials over mpq, keyed by power
# ---------------------------------------------------------------------------

def _p_add(a: dict[int, mpq], b: dict[int, mpq]) -> dict[int, mpq]:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, mpq(0)) + v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _p_scale(a: dict[int, mpq], c) -> dict[int, mpq]:
    c = mpq(c)
    if not c:
        return {}
    return {k: c * v for k, v in a.items()}


def _p_diff(a: dict[int, mpq]) -> dict[int, mpq]:
    return {k - 1: k * v for k, v in a.items() if k}


def _p_mul_2x(a: dict[int, mpq]) -> dict[int, mpq]:
    return {k + 1: 2 * v for k, v in a.items()}


def _p_eval(a: dict[int, mpq], x: mpfr) -> mpfr:
    total = mpfr(0)
    for k, v in a.items():
        total += v * x ** k
    return total


# Taylor coefficients of sqrt(pi) G and sqrt(pi) E at 0, both exact:
#   sqrt(pi) E = 2 sum_j 2^j x^{2j+1} / (2j+1)!!
#   sqrt(pi) G = 2 sum_j 2^j x^{2j+2} / ((2j+2) (2j+1)!!)

@lru_cache(maxsize=None)
def _etilde_coeff(m: int) -> mpq:
    if m < 1 or m % 2 == 0:
        return mpq(0)
    j = (m - 1) // 2
    return mpq(2 * 2 ** j, int(gmpy2.double_fac(m)))


@lru_cache(maxsize=None)
def _gtilde_coeff(m: int) -> mpq:
    if m < 2 or m % 2:
        return mpq(0)
    j = m // 2 - 1
    return mpq(2 * 2 ** j, m * int(gmpy2.double_fac(m - 1)))


def _f_taylor(p_tilde, q, r, m: int) -> mpq:
    """Coefficient of x^m in sqrt(pi) f, exact."""
    total = p_tilde.get(m, mpq(0))
    for k, v in q.items():
        if m - k >= 2:
            total += v * _gtilde_coeff(m - k)
    for k, v in r.items():
        if m - k >= 1:
            total += v * _etilde_coeff(m - k)
    return total


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

class LadderFunction:
    """f_n for X_n = f_n e^{-x^2/2}, as exact (p, q, r) over {1, G, E}.

    p_tilde holds sqrt(pi) p (a rational polynomial); q and r are rational
    polynomials; c_tilde is sqrt(pi) C_n, the normalization admixture of the
    order-0 polynomial absorbed into p_tilde.  Immutable after build.
    """

    __slots__ = ("level", "p_tilde", "q", "r", "c_tilde")

    def __init__(self, level: int, p_tilde, q, r, c_tilde):
        self.level = level
        self.p_tilde = dict(p_tilde)
        self.q = dict(q)
        self.r = dict(r)
        self.c_tilde = mpq(c_tilde)

    def taylor_coefficient(self, m: int) -> mpq:
        """Coefficient of x^m in sqrt(pi) X_n e^{x^2/2}, exact."""
        return _f_taylor(self.p_tilde, self.q, self.r, m)

    def __repr__(self) -> str:
        return (f"LadderFunction(level={self.level}, "
                f"c_tilde={self.c_tilde})")


class CalE:
    """The level constant CalE_n = -2^{n+1}/(n! sqrt(pi)).

    rational holds the exact factor multiplying 1/sqrt(pi).
    """

    __slots__ = ("n", "rational")

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("level must be >= 0")
        self.n = n
        self.rational = -mpq(2 ** (n + 1), int(gmpy2.fac(n)))

    def to_mpfr(self, bits: int = DEFAULT_PRECISION) -> mpfr:
        with workprec(bits + 16):
            value = self.rational / gmpy2.sqrt(gmpy2.const_pi())
        return bigfloat(value, bits)

    def __repr__(self) -> str:
        return f"CalE(n={self.n}, {self.rational}/sqrt(pi))"


# ---------------------------------------------------------------------------
# the creation ladder
# ---------------------------------------------------------------------------

def build_ladder(n: int) -> LadderFunction:
    """X_n by n applications of (x - d/dx)/(level+1) to X_0 = 2 G e^{-x^2/2}.

    On the polynomial part the ladder step is f -> (2x f - f')/(level+1);
    the ring closure gives, in (p_tilde, q, r) components,

        p_tilde -> (2x p_tilde - p_tilde' - 2r) / (level+1)
        q       -> (2x q - q') / (level+1)
        r       -> -(q + r') / (level+1).

    The final normalization admixture C_n is fixed by requiring the x^n
    Taylor coefficient of f_n to vanish, exactly as a rational.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    p_tilde: dict[int, mpq] = {}
    q: dict[int, mpq] = {0: mpq(2)}
    r: dict[int, mpq] = {}
    for level in range(n):
        inv = mpq(1, level + 1)
        p_new = _p_scale(_p_add(_p_mul_2x(p_tilde),
                                _p_scale(_p_add(_p_diff(p_tilde),
                                                _p_scale(r, 2)), -1)), inv)
        q_new = _p_scale(_p_add(_p_mul_2x(q), _p_scale(_p_diff(q), -1)), inv)
        r_new = _p_scale(_p_add(q, _p_diff(r)), -inv)
        p_tilde, q, r = p_new, q_new, r_new
    c_tilde = -_f_taylor(p_tilde, q, r, n)
    if c_tilde:
        p_tilde = _p_add(p_tilde, _p_scale(hermite_monic(n), c_tilde))
    return LadderFunction(n, p_tilde, q, r, c_tilde)


def _derivative_triple(p_tilde, q, r):
    """(p_tilde, q, r) of f' using G' = E, E' = 2xE + 2/sqrt(pi)."""
    dp = _p_add(_p_diff(p_tilde), _p_scale(r, 2))
    dq = _p_diff(q)
    dr = _p_add(q, _p_add(_p_diff(r), _p_mul_2x(r)))
    return dp, dq, dr


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------

_G_AT_CUTOFF: dict[tuple[int, int], mpfr] = {}


def _g_direct(x: mpfr, bits: int, tol_bits: int) -> mpfr:
    tol = gmpy2.exp2(40 - tol_bits) * gmpy2.exp(x * x)
    return integrate_regularized(
        lambda t: gmpy2.exp(t * t) * erf_highprec(t, bits),
        0, x, "none", tol=tol, bits=bits, max_panels=40000)


def _g_value(x: mpfr, bits: int, tol_bits: int | None = None) -> mpfr:
    """G(x) = int_0^x e^{t^2} erf(t) dt; even, so reduced to x >= 0.

    Direct quadrature up to the cutoff; beyond it the identity
    erf = 1 - erfc turns the tail into (sqrt(pi)/2)(erfi(x) - erfi(cut))
    minus an integral of the scaled complement e^{t^2} erfc(t), which
    decays like 1/t and stays quadrature-friendly.

    bits sets the arithmetic precision; tol_bits the quadrature error
    target (relative to the e^{x^2} scale of the result).  Certified
    callers raise bits between tiers while keeping tol_bits fixed, since
    the subdivision error does not shrink with the working precision.
    """
    if tol_bits is None:
        tol_bits = bits
    # the subdivision can only converge below tol if the panel arithmetic
    # runs well past it, whatever tier the caller is on
    bits_q = max(bits, tol_bits + 32)
    ax = abs(x)
    if ax == 0:
        return mpfr(0)
    if ax <= _DIRECT_CUTOFF:
        return _g_direct(ax, bits_q, tol_bits)
    key = (bits_q, tol_bits)
    if key not in _G_AT_CUTOFF:
        _G_AT_CUTOFF[key] = _g_direct(mpfr(_DIRECT_CUTOFF), bits_q, tol_bits)
    cut = mpfr(_DIRECT_CUTOFF)
    # The result is dominated by the erfi term of size ~ e^{x^2}/(2x), so
    # the O(1)-sized erfc tail only needs enough bits to land below the
    # overall relative target; evaluating it at full precision would be
    # pure waste.
    tol = gmpy2.exp2(44 - tol_bits) * gmpy2.exp(ax * ax) / (2 * ax)
    eff = max(80, tol_bits - 32 - int(float(ax) ** 2 * 1.4426950408889634))
    tail = integrate_regularized(lambda t: erfc_scaled(t, eff),
                                 cut, ax, "none", tol=tol, bits=bits_q)
    with workprec(bits_q):
        half_sqrt_pi = gmpy2.sqrt(gmpy2.const_pi()) / 2
        return (_G_AT_CUTOFF[key]
                + half_sqrt_pi * (erfi_highprec(ax, bits_q) - erfi_highprec(cut, bits_q))
                - tail)


def _e_value(x: mpfr, bits: int) -> mpfr:
    """E(x) = e^{x^2} erf(x); odd."""
    return gmpy2.exp(x * x) * erf_highprec(x, bits)


def _triple_eval(p_tilde, q, r, x, g, e, sqrt_pi) -> mpfr:
    return (_p_eval(p_tilde, x) / sqrt_pi
            + _p_eval(q, x) * g + _p_eval(r, x) * e)


def eval_ladder(L: LadderFunction, x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """X_n(x), stability-certified across two precision tiers."""
    tol_bits = bits + 56

    def attempt(prec: int) -> mpfr:
        with workprec(prec):
            xv = mpfr(x)
            g = _g_value(xv, prec, tol_bits)
            e = _e_value(xv, prec)
            sq = gmpy2.sqrt(gmpy2.const_pi())
            f = _triple_eval(L.p_tilde, L.q, L.r, xv, g, e, sq)
            return f * gmpy2.exp(-xv * xv / 2)

    return certified_eval(attempt, bits)


def eval_ladder_normalized(L: LadderFunction, x,
                           bits: int = DEFAULT_PRECISION) -> mpfr:
    """X_n(x) rescaled by its lowest nonzero Taylor coefficient.

    For the ground level this is the hatted profile
    X^_0 = sqrt(pi) G e^{-x^2/2} = x^2 - x^4/6 + ..., the shape the
    order-normalized fixed-x profiles converge to.
    """
    m = L.level % 2
    lead = L.taylor_coefficient(m)
    while not lead:
        m += 2
        if m > 4 * L.level + 8:
            raise RuntimeError("no nonzero Taylor coefficient found")
        lead = L.taylor_coefficient(m)
    value = eval_ladder(L, x, bits=bits)
    with workprec(bits + 16):
        return bigfloat(value * gmpy2.sqrt(gmpy2.const_pi()) / lead, bits)


def ode_residual(L: LadderFunction, x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """-X_n''/2 + x^2 X_n/2 - (n+1/2) X_n - CalE_n Psi_{n,0} at x.

    Derivatives are taken symbolically in the triple ring, so the residual
    probes only the correctness of the stored coefficients and of the
    G/E evaluation, not any finite-difference error.
    """
    n = L.level
    with workprec(bits + 32):
        xv = mpfr(x)
        g = _g_value(xv, bits + 32)
        e = _e_value(xv, bits + 32)
        sq = gmpy2.sqrt(gmpy2.const_pi())
        t0 = (L.p_tilde, L.q, L.r)
        t1 = _derivative_triple(*t0)
        t2 = _derivative_triple(*t1)
        f0 = _triple_eval(*t0, xv, g, e, sq)
        f1 = _triple_eval(*t1, xv, g, e, sq)
        f2 = _triple_eval(*t2, xv, g, e, sq)
        gauss = gmpy2.exp(-xv * xv / 2)
        value = f0 * gauss
        second = (f2 - 2 * xv * f1 + (xv * xv - 1) * f0) * gauss
        source = (CalE(n).rational / sq) * _p_eval(hermite_monic(n), xv) * gauss
        residual = (-second / 2 + xv * xv * value / 2
                    - (n + mpq(1, 2)) * value - source)
    return bigfloat(residual, bits)


# ---------------------------------------------------------------------------
# the large-order asymptote at fixed argument
# ---------------------------------------------------------------------------

def _prefactor_log(consts, n: int, k: int) -> mpfr:
    """ln of c^{n+1/2} k! k^{n-1/2} / (2 pi s_inf^{k+n+1/2})."""
    kf = mpfr(k)
    return ((n + mpfr("0.5")) * gmpy2.log(consts.c)
            + gmpy2.lngamma(kf + 1)
            + (n - mpfr("0.5")) * gmpy2.log(kf)
            - gmpy2.log(2 * gmpy2.const_pi())
            - (kf + n + mpfr("0.5")) * gmpy2.log(consts.s_infinity))


def energy_asymptotic(consts, n: int, k: int) -> SignedLog:
    """E_{n,k} ~ c^{n+1/2}/(2 pi) k! k^{n-1/2} / s_inf^{k+n+1/2} CalE_n."""
    if k < 1:
        raise ValueError("asymptote needs k >= 1")
    cal = CalE(n)
    with workprec(consts.bits + 16):
        lm = (_prefactor_log(consts, n, k)
              + gmpy2.log(abs(cal.rational))
              - gmpy2.log(gmpy2.const_pi()) / 2)
    return SignedLog(-1, lm)


def quartic_energy_asymptotic(k: int, bits: int = DEFAULT_PRECISION) -> SignedLog:
    """Ground-level asymptote for V = x^2/2 - x^4 in closed form.

    With s_inf = 1/3, c = 2 and CalE_0 = -2/sqrt(pi) the generic formula
    collapses to -(sqrt(6)/pi^{3/2}) 3^k k!/sqrt(k); kept as a separate
    code path to cross-check the generic one.
    """
    if k < 1:
        raise ValueError("asymptote needs k >= 1")
    with workprec(bits + 16):
        kf = mpfr(k)
        pi = gmpy2.const_pi()
        lm = (gmpy2.log(mpfr(6)) / 2 - 3 * gmpy2.log(pi) / 2
              + kf * gmpy2.log(mpfr(3)) + gmpy2.lngamma(kf + 1)
              - gmpy2.log(kf) / 2)
    return SignedLog(-1, lm)


def wave_fixed_x_asymptotic(consts, L: LadderFunction, n: int, k: int,
                            x) -> SignedLog:
    """Psi_{n,k}(x) ~ c^{n+1/2}/(2 pi) k! k^{n-1/2} / s_inf^{k+n+1/2} X_n(x)."""
    if k < 1:
        raise ValueError("asymptote needs k >= 1")
    if L.level != n:
        raise ValueError(f"ladder function has level {L.level}, not {n}")
    profile = SignedLog.from_value(eval_ladder(L, x, bits=consts.bits),
                                   bits=consts.bits)
    if profile.sign == 0:
        return profile
    with workprec(consts.bits + 16):
        return SignedLog(profile.sign,
                         _prefactor_log(consts, n, k) + profile.log_magnitude)
