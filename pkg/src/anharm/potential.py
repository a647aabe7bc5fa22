"""Even polynomial potentials with a harmonic well and a negative quartic.

The model family is V(Q) = Q^2/2 + sum_{p>=2} a_{2p} Q^{2p} with exact
rational anharmonic coefficients.  A valid potential has the barrier shape:
a relative minimum at the origin, positive values out to a simple positive
root Q_plus, and negative values beyond it.  The quartic coefficient must
be negative; it sets the overall decay scale of the series the rest of the
package computes.

Instances are immutable after validation and safe to share between
threads.
"""

from __future__ import annotations

import json

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import DEFAULT_PRECISION, Rational, find_root_bracketed, workprec

__all__ = [
    "Potential",
    "MissingQuartic",
    "WrongSignQuartic",
    "NoTurningPoint",
    "ShapeViolation",
    "validate_potential",
    "potential_values",
    "potential_from_config",
    "quartic_potential",
]

# Root search covers (2^-10, 2^10] with 16 dyadic points per octave, so the
# sign of V is evaluated exactly at every scan point.
_SCAN_LOW_EXP = -10
_SCAN_HIGH_EXP = 10
_SCAN_PER_OCTAVE = 16
_GRID_POINTS = 256


class MissingQuartic(Exception):
    """No degree-4 coefficient was supplied (or it is exactly zero)."""


class WrongSignQuartic(Exception):
    """The degree-4 coefficient is positive; the barrier needs a4 < 0."""


class NoTurningPoint(Exception):
    """V has no positive root inside the search window."""


class ShapeViolation(Exception):
    """V is not strictly positive on (0, Q_plus), or the root is degenerate."""


class Potential:
    """Validated even polynomial potential.

    Attributes
    ----------
    coefficients : dict[int, Rational]
        Anharmonic coefficients keyed by even degree 2p >= 4; the harmonic
        1/2 at degree 2 is implied and not stored.
    max_degree : int
    turning_point : mpfr
        Q_plus, the smallest positive root of V.

    Construct through validate_potential; the constructor performs no
    checking.
    """

    __slots__ = ("coefficients", "max_degree", "turning_point", "_rate_coeffs")

    def __init__(self, coefficients: dict[int, mpq], turning_point: mpfr):
        self.coefficients = dict(coefficients)
        self.max_degree = max(coefficients)
        self.turning_point = turning_point
        # V - (Q/2) V' drops the harmonic term and rescales each a_{2p}
        # by (1 - p); kept symbolic so rational inputs stay exact.
        self._rate_coeffs = {d: (1 - d // 2) * c for d, c in self.coefficients.items()}

    @property
    def a4(self) -> mpq:
        return self.coefficients[4]

    def anharmonic_terms(self):
        """Sorted (p, a_{2p}) pairs with 2p the stored degree."""
        return [(d // 2, self.coefficients[d]) for d in sorted(self.coefficients)]

    def value(self, q):
        """V(q); exact when q is rational."""
        y = q * q
        acc = _horner_even(self.coefficients, y)
        return y / 2 + acc * y * y

    def derivative(self, q):
        """V'(q); exact when q is rational."""
        y = q * q
        acc = _horner_even({d: (d * c) for d, c in self.coefficients.items()}, y)
        return q + acc * y * q

    def lambda_rate(self, q):
        """V(q) - (q/2) V'(q), computed from its own symbolic coefficients."""
        y = q * q
        return _horner_even(self._rate_coeffs, y) * y * y

    def __repr__(self) -> str:
        terms = ", ".join(f"{d}: {c}" for d, c in sorted(self.coefficients.items()))
        return f"Potential({{{terms}}}, Q+={self.turning_point})"


def _horner_even(coeffs: dict[int, mpq], y):
    """Evaluate sum_d coeffs[d] * y^(d/2 - 2) by Horner in y = q^2."""
    top = max(coeffs)
    acc = 0
    for d in range(top, 2, -2):
        acc = acc * y + coeffs.get(d, 0)
    return acc


def _barrier_factor(coefficients: dict[int, mpq], q):
    """V(q)/q^2 = 1/2 + sum a_{2p} q^{2p-2}; shares V's positive roots."""
    y = q * q
    return mpq(1, 2) + _horner_even(coefficients, y) * y


def validate_potential(raw, bits: int = DEFAULT_PRECISION) -> Potential:
    """Check shape requirements and locate the turning point.

    Parameters
    ----------
    raw : mapping of even degree (>= 4) to rational coefficient
    bits : precision used for the turning-point refinement

    Returns the validated Potential.

    Raises
    ------
    MissingQuartic, WrongSignQuartic, NoTurningPoint, ShapeViolation
        for the structural failures described in each class docstring
    ValueError
        for malformed input (odd degrees, degree < 4, non-rational values)
    """
    coefficients: dict[int, mpq] = {}
    for key, val in dict(raw).items():
        d = int(key)
        if d != key and not (isinstance(key, str) and str(d) == key):
            raise ValueError(f"degree {key!r} is not an integer")
        if d % 2 or d < 4:
            raise ValueError(f"degree {d} must be even and >= 4")
        try:
            c = mpq(val)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"coefficient for degree {d} is not rational: {val!r}") from exc
        if c != 0:
            coefficients[d] = c
    if 4 not in coefficients:
        raise MissingQuartic("potential requires a nonzero degree-4 coefficient")
    if coefficients[4] > 0:
        raise WrongSignQuartic(f"degree-4 coefficient must be negative, got {coefficients[4]}")

    # Scan dyadic points for the first sign change of V/q^2; the polynomial
    # is evaluated in exact rational arithmetic, so signs are certain.
    bracket = None
    prev_q = None
    prev_positive = True  # limit q -> 0+ is 1/2
    for j in range(_SCAN_LOW_EXP, _SCAN_HIGH_EXP):
        base = mpq(2) ** j
        for i in range(_SCAN_PER_OCTAVE):
            q = base * (_SCAN_PER_OCTAVE + i) / _SCAN_PER_OCTAVE
            w = _barrier_factor(coefficients, q)
            if w == 0:
                bracket = (q, q)
                break
            positive = w > 0
            if positive != prev_positive:
                bracket = (prev_q if prev_q is not None else mpq(0), q)
                break
            prev_q, prev_positive = q, positive
        if bracket:
            break
    if bracket is None:
        raise NoTurningPoint(
            f"V has no positive root below {mpq(2) ** _SCAN_HIGH_EXP}")

    with workprec(bits):
        if bracket[0] == bracket[1]:
            q_plus = mpfr(bracket[0])
        else:
            q_plus = find_root_bracketed(
                lambda q: _barrier_factor(coefficients, q),
                mpfr(bracket[0]), mpfr(bracket[1]),
                tol=gmpy2.exp2(8 - bits), bits=bits)

        # Fig. 1a shape: strictly positive inside (0, Q_plus) ...
        for i in range(1, _GRID_POINTS + 1):
            q = q_plus * i / (_GRID_POINTS + 1)
            if _barrier_factor(coefficients, q) <= 0:
                raise ShapeViolation(f"V not positive at Q = {q} inside (0, Q+)")
        # ... and a genuine sign change across Q_plus (simple root).
        eps = mpfr("1e-3")
        if not (_barrier_factor(coefficients, q_plus * (1 - eps)) > 0
                > _barrier_factor(coefficients, q_plus * (1 + eps))):
            raise ShapeViolation("turning point is degenerate: V does not change sign")

    return Potential(coefficients, q_plus)


def potential_values(pot: Potential, q):
    """(V(q), V'(q), V(q) - (q/2) V'(q)) as one call; exact for rational q."""
    return pot.value(q), pot.derivative(q), pot.lambda_rate(q)


def quartic_potential(bits: int = DEFAULT_PRECISION) -> Potential:
    """The reference barrier V = Q^2/2 - Q^4."""
    return validate_potential({4: Rational(-1)}, bits=bits)


def potential_from_config(source, bits: int = DEFAULT_PRECISION) -> Potential:
    """Build a Potential from a JSON config object or string.

    Accepted layout: {"coeffs": {"4": "-1", "6": "1/100"}} where values are
    integers or fraction strings "p/q".  Unknown top-level keys and unknown
    entry types are rejected.
    """
    if isinstance(source, str):
        obj = json.loads(source)
    else:
        obj = source
    if not isinstance(obj, dict):
        raise ValueError("potential config must be a JSON object")
    unknown = set(obj) - {"coeffs"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "coeffs" not in obj or not isinstance(obj["coeffs"], dict):
        raise ValueError('potential config needs a "coeffs" object')
    raw: dict[int, mpq] = {}
    for key, val in obj["coeffs"].items():
        try:
            d = int(key)
        except ValueError as exc:
            raise ValueError(f"coefficient degree {key!r} is not an integer") from exc
        if not isinstance(val, (int, str)):
            raise ValueError(f"coefficient for degree {d} must be an integer or 'p/q' string")
        raw[d] = mpq(val)
    return validate_potential(raw, bits=bits)
