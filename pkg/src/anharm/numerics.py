"""Arbitrary-precision arithmetic and analysis primitives.

Everything downstream runs on three value kinds: exact rationals
(gmpy2.mpq), binary floats with an explicit precision (gmpy2.mpfr), and a
sign plus log-magnitude pair for factorially large quantities.  On top of
those this module provides regularized quadrature with declared endpoint
behavior, deterministic bracketed root finding, and the error function
family at high precision.

All routines are pure functions of their inputs.  Precision is always
passed explicitly (in bits) and restored on exit, so concurrent callers at
different precisions do not interfere.
"""

from __future__ import annotations

import heapq

import gmpy2
from gmpy2 import mpfr, mpq

__all__ = [
    "DEFAULT_PRECISION",
    "Rational",
    "SignedLog",
    "NonConvergence",
    "DomainError",
    "NoSignChange",
    "PrecisionExhausted",
    "bigfloat",
    "workprec",
    "integrate_regularized",
    "find_root_bracketed",
    "erf_highprec",
    "erfi_highprec",
    "erfc_scaled",
    "certified_eval",
]

DEFAULT_PRECISION = 128

# Exact rational type used for every coefficient in the package.
Rational = mpq


class NonConvergence(Exception):
    """Quadrature error estimate failed to reach tolerance within budget."""


class DomainError(Exception):
    """An integrand evaluated non-finite in the interior of the interval."""


class NoSignChange(Exception):
    """Root bracket endpoints do not straddle a sign change."""


class PrecisionExhausted(Exception):
    """Stability was not certified below the precision escalation cap."""


def workprec(bits: int):
    """Context manager setting the active mpfr precision to `bits`."""
    return gmpy2.context(precision=bits)


def bigfloat(value, bits: int | None = None) -> mpfr:
    """Convert `value` (int, str, Rational, float, mpfr) to an mpfr.

    The result carries precision `bits` (default DEFAULT_PRECISION) and the
    conversion is correctly rounded at that precision.
    """
    return mpfr(value, bits or DEFAULT_PRECISION)


class SignedLog:
    """A real number stored as (sign, natural log of absolute value).

    Covers factorial-scale magnitudes (k! for k well beyond 200) without
    overflow and keeps multiplicative structure exact in log space:
    multiplication adds log magnitudes and multiplies signs.  sign is one
    of -1, 0, +1; log_magnitude is an mpfr and is -inf when sign is 0.
    """

    __slots__ = ("sign", "log_magnitude")

    def __init__(self, sign: int, log_magnitude):
        if sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        self.sign = sign
        if not sign:
            self.log_magnitude = mpfr("-inf")
        elif isinstance(log_magnitude, mpfr):
            # keep the precision the caller computed at
            self.log_magnitude = log_magnitude
        else:
            self.log_magnitude = mpfr(log_magnitude, DEFAULT_PRECISION)

    @property
    def _bits(self) -> int:
        return max(getattr(self.log_magnitude, "precision", 0), DEFAULT_PRECISION)

    @classmethod
    def from_value(cls, x, bits: int = DEFAULT_PRECISION) -> "SignedLog":
        with workprec(max(bits, getattr(x, "precision", 0))):
            x = mpfr(x)
            if x == 0:
                return cls(0, mpfr("-inf"))
            return cls(1 if x > 0 else -1, gmpy2.log(abs(x)))

    @classmethod
    def from_rational(cls, q, bits: int = DEFAULT_PRECISION) -> "SignedLog":
        q = mpq(q)
        if q == 0:
            return cls(0, mpfr("-inf"))
        sign = 1 if q > 0 else -1
        # Numerator and denominator are converted separately so that
        # arbitrarily large integers never overflow the float conversion.
        with workprec(bits):
            lm = gmpy2.log(mpfr(abs(q.numerator))) - gmpy2.log(mpfr(q.denominator))
        return cls(sign, lm)

    @classmethod
    def from_factorial(cls, n: int, bits: int = DEFAULT_PRECISION) -> "SignedLog":
        """ln(n!) via lngamma, exact sign +1."""
        with workprec(bits):
            return cls(1, gmpy2.lngamma(mpfr(n) + 1))

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        s = self.sign * other.sign
        if s == 0:
            return SignedLog(0, mpfr("-inf"))
        with workprec(max(self._bits, other._bits)):
            return SignedLog(s, self.log_magnitude + other.log_magnitude)

    def __truediv__(self, other: "SignedLog") -> "SignedLog":
        if other.sign == 0:
            raise ZeroDivisionError("division by SignedLog zero")
        if self.sign == 0:
            return SignedLog(0, mpfr("-inf"))
        with workprec(max(self._bits, other._bits)):
            return SignedLog(self.sign * other.sign,
                             self.log_magnitude - other.log_magnitude)

    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.log_magnitude)

    def __abs__(self) -> "SignedLog":
        return SignedLog(abs(self.sign), self.log_magnitude)

    def pow(self, exponent) -> "SignedLog":
        """Raise to a real power; non-integer exponents require sign >= 0."""
        if self.sign == 0:
            return SignedLog(0, mpfr("-inf"))
        with workprec(self._bits):
            e = mpfr(exponent)
            if self.sign < 0:
                if e != gmpy2.rint(e):
                    raise ValueError("fractional power of a negative SignedLog")
                s = -1 if int(e) % 2 else 1
                return SignedLog(s, self.log_magnitude * e)
            return SignedLog(1, self.log_magnitude * e)

    def to_mpfr(self) -> mpfr:
        """Back to a plain float; may overflow to inf for huge magnitudes."""
        if self.sign == 0:
            return mpfr(0)
        with workprec(self._bits):
            return self.sign * gmpy2.exp(self.log_magnitude)

    def __repr__(self) -> str:
        return f"SignedLog(sign={self.sign}, ln|x|={self.log_magnitude})"


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature with endpoint regularization
# ---------------------------------------------------------------------------

_GL_CACHE: dict[tuple[int, int], tuple[list, list]] = {}


def _gauss_legendre(order: int, bits: int):
    """Nodes and weights for Gauss-Legendre of given order on [-1, 1].

    Computed by Newton iteration on the Legendre recurrence at `bits`
    precision and cached per (order, bits).
    """
    key = (order, bits)
    cached = _GL_CACHE.get(key)
    if cached is not None:
        return cached
    with workprec(bits + 24):
        pi = gmpy2.const_pi()
        nodes, weights = [], []
        for i in range(1, order + 1):
            x = gmpy2.cos(pi * (i - mpfr("0.25")) / (order + mpfr("0.5")))
            dp = mpfr(1)
            for _ in range(100):
                p0, p1 = mpfr(1), x
                for j in range(2, order + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                dp = order * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < gmpy2.exp2(-(bits + 8)):
                    break
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    _GL_CACHE[key] = (nodes, weights)
    return _GL_CACHE[key]


def _panel(f, a, b, bits):
    """Low/high order Gauss-Legendre estimates of the integral on [a, b]."""
    half = (b - a) / 2
    mid = (a + b) / 2
    acc10 = mpfr(0)
    acc20 = mpfr(0)
    n10, w10 = _gauss_legendre(10, bits)
    n20, w20 = _gauss_legendre(20, bits)
    for x, w in zip(n10, w10):
        v = f(mid + half * x)
        if not gmpy2.is_finite(v):
            raise DomainError(f"integrand non-finite at {mid + half * x}")
        acc10 += w * v
    for x, w in zip(n20, w20):
        v = f(mid + half * x)
        if not gmpy2.is_finite(v):
            raise DomainError(f"integrand non-finite at {mid + half * x}")
        acc20 += w * v
    return acc10 * half, acc20 * half


def gl_fixed(f, a, b, bits: int) -> mpfr:
    """Single 20-node Gauss-Legendre panel over [a, b]; no error control."""
    _, hi = _panel(f, mpfr(a), mpfr(b), bits)
    return hi


def integrate_regularized(f, a, b, endpoint_singularities: str = "none",
                          tol=None, bits: int = DEFAULT_PRECISION,
                          max_panels: int = 4000) -> mpfr:
    """Adaptive quadrature of f over [a, b] with declared endpoint behavior.

    Parameters
    ----------
    f : callable mpfr -> mpfr, finite on the open interval
    a, b : interval endpoints, a < b
    endpoint_singularities : one of "none", "inverse_sqrt_at_a",
        "inverse_sqrt_at_b", "simple_pole_subtracted_at_a".  Inverse square
        root endpoints are removed by the substitution u^2 = distance to the
        endpoint before subdividing; the pole-subtracted flag records that f
        already contains its own counterterm and is finite at a.
    tol : absolute error target (default 1e-12)
    bits : working precision
    max_panels : subdivision budget

    Raises
    ------
    NonConvergence : error estimate still above tol at the panel budget
    DomainError : f returned a non-finite value in the interior
    """
    with workprec(bits):
        a = mpfr(a)
        b = mpfr(b)
        if not a < b:
            raise ValueError("require a < b")
        tol = mpfr(tol) if tol is not None else mpfr("1e-12")
        if endpoint_singularities == "inverse_sqrt_at_a":
            g = lambda t: f(a + t * t) * 2 * t
            lo, hi = mpfr(0), gmpy2.sqrt(b - a)
        elif endpoint_singularities == "inverse_sqrt_at_b":
            g = lambda t: f(b - t * t) * 2 * t
            lo, hi = mpfr(0), gmpy2.sqrt(b - a)
        elif endpoint_singularities in ("none", "simple_pole_subtracted_at_a"):
            g, lo, hi = f, a, b
        else:
            raise ValueError(f"unknown endpoint kind {endpoint_singularities!r}")

        i10, i20 = _panel(g, lo, hi, bits)
        heap = [(-abs(i20 - i10), 0, lo, hi, i20)]
        total = i20
        total_err = abs(i20 - i10)
        counter = 1
        while total_err > tol:
            if counter >= max_panels:
                raise NonConvergence(
                    f"estimated error {total_err} above tol {tol} "
                    f"after {counter} panels")
            neg_err, _, pa, pb, pi20 = heapq.heappop(heap)
            total -= pi20
            total_err += neg_err  # neg_err is negative
            pm = (pa + pb) / 2
            for qa, qb in ((pa, pm), (pm, pb)):
                j10, j20 = _panel(g, qa, qb, bits)
                err = abs(j20 - j10)
                heapq.heappush(heap, (-err, counter, qa, qb, j20))
                counter += 1
                total += j20
                total_err += err
        return total


def find_root_bracketed(f, lo, hi, tol=None, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Deterministic root of f on [lo, hi] where f changes sign.

    Bisection core with a secant step whenever the secant point lands
    safely inside the current bracket; every second step bisects, so the
    bracket width is guaranteed to halve at least every other iteration.
    Returns the bracket midpoint once the width drops below tol.

    Raises NoSignChange when f(lo) and f(hi) have the same (nonzero) sign.
    """
    with workprec(bits):
        lo = mpfr(lo)
        hi = mpfr(hi)
        tol = mpfr(tol) if tol is not None else mpfr("1e-12")
        flo = f(lo)
        fhi = f(hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        if (flo > 0) == (fhi > 0):
            raise NoSignChange(f"f({lo}) and f({hi}) have the same sign")
        use_secant = True
        while hi - lo > tol:
            width = hi - lo
            x = None
            if use_secant and fhi != flo:
                xs = hi - fhi * width / (fhi - flo)
                margin = width / 64
                if lo + margin < xs < hi - margin:
                    x = xs
            if x is None:
                x = lo + width / 2
            use_secant = not use_secant
            fx = f(x)
            if fx == 0:
                return x
            if (fx > 0) == (flo > 0):
                lo, flo = x, fx
            else:
                hi, fhi = x, fx
        return lo + (hi - lo) / 2


# ---------------------------------------------------------------------------
# Error function family
# ---------------------------------------------------------------------------

def _erf_series(x: mpfr, bits: int) -> mpfr:
    # erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_n (2x^2)^n / (2n+1)!!
    # All terms positive: no cancellation at any x.
    eps = gmpy2.exp2(-(bits + 4))
    xx2 = 2 * x * x
    term = mpfr(1)
    acc = mpfr(1)
    n = 0
    while term > eps * acc:
        n += 1
        term = term * xx2 / (2 * n + 1)
        acc += term
    return 2 * x * gmpy2.exp(-x * x) / gmpy2.sqrt(gmpy2.const_pi()) * acc


def _erfc_cf(x: mpfr, bits: int) -> mpfr:
    # sqrt(pi) e^{x^2} erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated by the modified Lentz algorithm.  Reliable for x >= 2.
    tiny = gmpy2.exp2(-(4 * bits))
    eps = gmpy2.exp2(-(bits + 4))
    fval = tiny
    c = fval
    d = mpfr(0)
    n = 0
    while True:
        n += 1
        if n == 1:
            an, bn = mpfr(1), x
        else:
            an, bn = mpfr(n - 1) / 2, x
        d = bn + an * d
        if d == 0:
            d = tiny
        c = bn + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = c * d
        fval *= delta
        if abs(delta - 1) < eps:
            break
        if n > 64 * bits:
            raise NonConvergence("erfc continued fraction stalled")
    return fval  # this is sqrt(pi) e^{x^2} erfc(x)


def erf_highprec(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Error function at explicit precision.

    Series with positive terms for |x| <= 3.25 and the continued-fraction
    complement beyond; both run with 64 guard bits, giving relative error
    well inside the 2^(8-bits) contract.  The switch point keeps the series
    (whose cost grows only mildly with x^2) wherever the continued fraction
    would still converge slowly.
    """
    guard = bits + 64
    with workprec(guard):
        x = mpfr(x)
        if x == 0:
            return bigfloat(0, bits)
        ax = abs(x)
        if ax <= mpfr("3.25"):
            v = _erf_series(ax, guard)
        else:
            v = 1 - gmpy2.exp(-ax * ax) * _erfc_cf(ax, guard) / gmpy2.sqrt(gmpy2.const_pi())
        if x < 0:
            v = -v
    return bigfloat(v, bits)


def erfi_highprec(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Imaginary error function erfi(x) = -i erf(ix); all-positive series."""
    guard = bits + 64
    with workprec(guard):
        x = mpfr(x)
        if x == 0:
            return bigfloat(0, bits)
        ax = abs(x)
        eps = gmpy2.exp2(-(guard + 4))
        xx = ax * ax
        # term_n = x^{2n+1}/(n! (2n+1)); track x^{2n+1}/n! and divide.
        pw = ax
        acc = ax
        n = 0
        while True:
            n += 1
            pw = pw * xx / n
            term = pw / (2 * n + 1)
            acc += term
            if term < eps * acc:
                break
        v = 2 * acc / gmpy2.sqrt(gmpy2.const_pi())
        if x < 0:
            v = -v
    return bigfloat(v, bits)


def erfc_scaled(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """e^{x^2} erfc(x) for x >= 0 without cancellation at large x."""
    guard = bits + 64
    with workprec(guard):
        x = mpfr(x)
        if x < 0:
            raise ValueError("erfc_scaled requires x >= 0")
        if x >= 2:
            v = _erfc_cf(x, guard) / gmpy2.sqrt(gmpy2.const_pi())
        else:
            v = gmpy2.exp(x * x) * (1 - _erf_series(x, guard))
    return bigfloat(v, bits)


# ---------------------------------------------------------------------------
# Certified re-evaluation
# ---------------------------------------------------------------------------

def certified_eval(fn, bits: int, agree_bits: int = 40, cap_factor: int = 16) -> mpfr:
    """Evaluate fn(precision) until two precision tiers agree.

    fn is called at a working precision P and again at 2P; the result is
    accepted once the two values agree to `agree_bits` relative bits.  On
    disagreement the base precision doubles, up to cap_factor * bits, after
    which PrecisionExhausted is raised.  Returns the higher-tier value
    rounded to `bits`.
    """
    p = bits
    while True:
        va = fn(p)
        vb = fn(2 * p)
        if va == vb:
            return bigfloat(vb, bits)
        scale = max(abs(va), abs(vb))
        if scale != 0 and abs(va - vb) <= scale * gmpy2.exp2(-agree_bits):
            return bigfloat(vb, bits)
        p *= 2
        if 2 * p > cap_factor * bits:
            raise PrecisionExhausted(
                f"no {agree_bits}-bit agreement below precision cap "
                f"{cap_factor}x{bits}")
