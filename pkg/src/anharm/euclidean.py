"""Zero-energy trajectory in the inverted potential and its exponents.

The bounce solution of Q'' = V'(Q) with E = 0 rises from the origin to the
turning point Q_plus and falls back.  Everything the asymptotic formulas
need is a quadrature along that path, parameterized by Q rather than by
euclidean time (time diverges logarithmically at both ends):

    tau_rise(Q) = ln Q + int_0^Q (1/sqrt(2V) - 1/q) dq
    s_rise(Q)   = int_0^Q sqrt(2V) dq
    tau_fall(Q) = ln c - tau_rise(Q),  s_fall(Q) = s_inf - s_rise(Q)

with s_inf the full bounce action and c the growth constant of Q ~ e^tau
near the origin.  From a point, the area variable lambda = s - Q P / 2,
the profile coordinate xi = Q / sqrt(lambda), and the decay exponent
A = s/lambda + ln lambda - 1 all follow in closed form.

A Trajectory instance prebuilds a 512-node grid (geometric spacing at the
origin end, sqrt spacing at the turning point) with prefix sums of both
integrals, so point queries and the inversions by tau or by xi cost only a
short one-panel quadrature plus root finding.
"""

from __future__ import annotations

from bisect import bisect_left

import gmpy2
from gmpy2 import mpfr

from .numerics import (
    DEFAULT_PRECISION,
    SignedLog,
    find_root_bracketed,
    gl_fixed,
    integrate_regularized,
    workprec,
)
from .potential import Potential

__all__ = [
    "NotMonotone",
    "OutOfRange",
    "NegativeRadicand",
    "EuclideanConstants",
    "EuclideanPoint",
    "AsymptoticValue",
    "Trajectory",
    "euclidean_constants",
    "point_of",
    "exponent_A",
    "prefactor_M",
    "wave_asymptotic",
]

RISING = "rising"
FALLING = "falling"

_GRID_POINTS = 512
_EDGE_FACTOR = mpfr("1e-6")  # lowest grid Q as a fraction of Q_plus
_GUARD_BITS = 32


class NotMonotone(Exception):
    """xi is not locally one-to-one along the trajectory near the preimage."""


class OutOfRange(Exception):
    """Requested coordinate lies outside the sampled trajectory."""


class NegativeRadicand(Exception):
    """Q lambda_dot / 2 - lambda Q_dot came out non-positive."""


class EuclideanConstants:
    """Turning point, bounce action, growth constant, and turn time."""

    __slots__ = ("q_plus", "s_infinity", "c", "tau_turn", "bits", "_trajectory")

    def __init__(self, q_plus, s_infinity, c, tau_turn, bits, trajectory):
        self.q_plus = q_plus
        self.s_infinity = s_infinity
        self.c = c
        self.tau_turn = tau_turn
        self.bits = bits
        self._trajectory = trajectory

    def __repr__(self) -> str:
        return (f"EuclideanConstants(Q+={self.q_plus}, s_inf={self.s_infinity}, "
                f"c={self.c}, tau_turn={self.tau_turn})")


class EuclideanPoint:
    """State of the bounce at one coordinate, with derived exponent data."""

    __slots__ = ("branch", "Q", "P", "tau", "s", "lam", "lambda_dot", "xi", "A")

    def __init__(self, branch, Q, P, tau, s, lam, lambda_dot, xi, A):
        self.branch = branch
        self.Q = Q
        self.P = P
        self.tau = tau
        self.s = s
        self.lam = lam
        self.lambda_dot = lambda_dot
        self.xi = xi
        self.A = A

    def __repr__(self) -> str:
        return (f"EuclideanPoint({self.branch}, Q={self.Q}, tau={self.tau}, "
                f"xi={self.xi}, A={self.A})")


class AsymptoticValue:
    """SignedLog magnitude of the scaled-argument asymptotic, plus a flag
    set when k xi^2 < 4 (outside the regime the formula was derived in)."""

    __slots__ = ("value", "warning")

    def __init__(self, value: SignedLog, warning: bool):
        self.value = value
        self.warning = warning


class Trajectory:
    """Grid-backed evaluator for one potential at one precision."""

    def __init__(self, pot: Potential, bits: int = DEFAULT_PRECISION,
                 grid_points: int = _GRID_POINTS):
        self.pot = pot
        self.bits = bits
        self._wp = bits + _GUARD_BITS
        wp = self._wp
        with workprec(wp):
            # refine the turning point at working precision
            seed = mpfr(pot.turning_point)
            self.q_plus = find_root_bracketed(
                lambda q: pot.value(q) / (q * q),
                seed * (1 - mpfr("1e-3")), seed * (1 + mpfr("1e-3")),
                tol=gmpy2.exp2(16 - wp), bits=wp)
            qp = self.q_plus
            tol = gmpy2.exp2(40 - wp)

            # authoritative constants by adaptive quadrature, split at the
            # midpoint: the time integrand has an inverse-sqrt singularity
            # at Q_plus and a subtracted pole at the origin
            half = qp / 2
            s_low = integrate_regularized(self._s2v, 0, half, "none",
                                          tol=tol, bits=wp)
            s_high = integrate_regularized(self._s2v, half, qp,
                                           "inverse_sqrt_at_b", tol=tol, bits=wp)
            self.s_infinity = 2 * (s_low + s_high)
            h_low = integrate_regularized(self._h, 0, half,
                                          "simple_pole_subtracted_at_a",
                                          tol=tol, bits=wp)
            h_high = integrate_regularized(self._h, half, qp,
                                           "inverse_sqrt_at_b", tol=tol, bits=wp)
            self.tau_turn = gmpy2.log(qp) + h_low + h_high
            self.c = gmpy2.exp(2 * self.tau_turn)

            # grid nodes: geometric on (edge, Q+/2], then uniform in
            # u = sqrt(Q+ - Q) up to the turning point
            n_low = grid_points // 2
            n_high = grid_points - n_low
            q_lo = qp * _EDGE_FACTOR
            ratio = gmpy2.exp(gmpy2.log(half / q_lo) / (n_low - 1))
            nodes = [q_lo]
            for _ in range(n_low - 2):
                nodes.append(nodes[-1] * ratio)
            nodes.append(half)
            u_max = gmpy2.sqrt(half)
            for j in range(1, n_high + 1):
                u = u_max * (n_high - j) / n_high
                nodes.append(qp - u * u)
            self.nodes = nodes
            self._i_half = n_low - 1  # index of the Q+/2 node

            # prefix sums of both integrals along the grid
            h_pref = [integrate_regularized(self._h, 0, q_lo,
                                            "simple_pole_subtracted_at_a",
                                            tol=tol, bits=wp)]
            s_pref = [integrate_regularized(self._s2v, 0, q_lo, "none",
                                            tol=tol, bits=wp)]
            for i in range(1, len(nodes)):
                a, b = nodes[i - 1], nodes[i]
                h_pref.append(h_pref[-1] + self._segment(self._h, a, b))
                s_pref.append(s_pref[-1] + self._segment(self._s2v, a, b))
            self.h_pref = h_pref
            self.s_pref = s_pref
            self.tau_nodes = [gmpy2.log(q) + h for q, h in zip(nodes, h_pref)]

            # xi along the trajectory at the nodes, for inversion brackets
            self.xi_rise = [self._assemble(q, RISING, h, s).xi
                            for q, h, s in zip(nodes, h_pref, s_pref)]
            self.xi_fall = [self._assemble(q, FALLING, h, s).xi
                            for q, h, s in zip(nodes, h_pref, s_pref)]
            self.xi_turn = self.xi_rise[-1]
            self._h_bound = max(abs(h) for h in h_pref) + 1

    # -- integrands ---------------------------------------------------------

    def _value_clamped(self, q) -> mpfr:
        v = self.pot.value(q)
        # the root tolerance can leave V a hair negative right at Q_plus
        return v if v > 0 else mpfr(0)

    def _s2v(self, q) -> mpfr:
        return gmpy2.sqrt(2 * self._value_clamped(q))

    def _h(self, q) -> mpfr:
        return 1 / gmpy2.sqrt(2 * self._value_clamped(q)) - 1 / q

    def _segment(self, f, a, b) -> mpfr:
        """One-panel integral of f over [a, b] <= Q_plus.

        Above the Q+/2 node the substitution u^2 = Q_plus - Q removes the
        inverse-sqrt behavior before the panel is applied.
        """
        if a == b:
            return mpfr(0)
        if b <= self.nodes[self._i_half]:
            return gl_fixed(f, a, b, self._wp)
        qp = self.q_plus
        ua = gmpy2.sqrt(qp - a)
        ub = gmpy2.sqrt(qp - b) if b < qp else mpfr(0)
        return gl_fixed(lambda u: f(qp - u * u) * 2 * u, ub, ua, self._wp)

    # -- cumulative maps ----------------------------------------------------

    def _prefix(self, Q):
        """(H(Q), S(Q)) = integrals of h and sqrt(2V) from 0 to Q."""
        wp = self._wp
        if Q < self.nodes[0]:
            tol = gmpy2.exp2(40 - wp)
            h = integrate_regularized(self._h, 0, Q,
                                      "simple_pole_subtracted_at_a",
                                      tol=tol, bits=wp)
            s = integrate_regularized(self._s2v, 0, Q, "none", tol=tol, bits=wp)
            return h, s
        i = bisect_left(self.nodes, Q)
        if i < len(self.nodes) and self.nodes[i] == Q:
            return self.h_pref[i], self.s_pref[i]
        i -= 1
        a = self.nodes[i]
        return (self.h_pref[i] + self._segment(self._h, a, Q),
                self.s_pref[i] + self._segment(self._s2v, a, Q))

    def _assemble(self, Q, branch, h_val, s_rise) -> EuclideanPoint:
        """Build the point from the two cumulative integrals at Q."""
        p_mag = self._s2v(Q)
        tau_rise = gmpy2.log(Q) + h_val
        if branch == RISING:
            P = p_mag
            tau = tau_rise
            s = s_rise
        else:
            P = -p_mag
            tau = self.c_log - tau_rise
            s = self.s_infinity - s_rise
        lam = s - Q * P / 2
        xi = Q / gmpy2.sqrt(lam)
        A = s / lam + gmpy2.log(lam) - 1
        return EuclideanPoint(branch, Q, P, tau, s, lam,
                              self.pot.lambda_rate(Q), xi, A)

    @property
    def c_log(self) -> mpfr:
        return 2 * self.tau_turn

    # -- public point queries -----------------------------------------------

    def point_by_Q(self, Q, branch: str) -> EuclideanPoint:
        if branch not in (RISING, FALLING):
            raise ValueError(f"branch must be {RISING!r} or {FALLING!r}")
        with workprec(self._wp):
            Q = mpfr(Q)
            if not 0 < Q <= self.q_plus:
                raise OutOfRange(f"Q = {Q} outside (0, Q_plus]")
            h, s = self._prefix(Q)
            return self._assemble(Q, branch, h, s)

    def point_by_tau(self, tau) -> EuclideanPoint:
        with workprec(self._wp):
            tau = mpfr(tau)
            branch = RISING if tau <= self.tau_turn else FALLING
            target = tau if branch == RISING else self.c_log - tau
            if target >= self.tau_nodes[-1]:
                Q = self.q_plus
            elif target < self.tau_nodes[0]:
                lo = gmpy2.exp(target - self._h_bound)
                tries = 0
                while gmpy2.log(lo) + self._prefix(lo)[0] > target:
                    lo /= 16
                    tries += 1
                    if tries > 64:
                        raise OutOfRange(f"tau = {tau} unreachable")
                Q = find_root_bracketed(
                    lambda q: gmpy2.log(q) + self._prefix(q)[0] - target,
                    lo, self.nodes[0], tol=gmpy2.exp2(24 - self._wp) * lo,
                    bits=self._wp)
            else:
                i = bisect_left(self.tau_nodes, target)
                if self.tau_nodes[i] == target:
                    Q = self.nodes[i]
                else:
                    Q = find_root_bracketed(
                        lambda q: gmpy2.log(q) + self._prefix(q)[0] - target,
                        self.nodes[i - 1], self.nodes[i],
                        tol=gmpy2.exp2(24 - self._wp) * self.nodes[i - 1],
                        bits=self._wp)
            h, s = self._prefix(Q)
            return self._assemble(Q, branch, h, s)

    def point_by_xi(self, xi) -> EuclideanPoint:
        with workprec(self._wp):
            xi = mpfr(xi)
            if xi <= 0:
                raise OutOfRange("xi must be positive")
            # xi(Q) has a sqrt cusp at the turning point, so values closer
            # to xi_turn than the cusp resolution belong to the turn itself
            band = self.xi_turn * gmpy2.exp2((26 - self._wp) // 2)
            if abs(xi - self.xi_turn) <= band:
                return self.point_by_Q(self.q_plus, RISING)
            if xi > self.xi_turn:
                branch, seq = RISING, self.xi_rise
                if xi > seq[0]:
                    raise OutOfRange(
                        f"xi = {xi} above sampled range (max {seq[0]})")
                # xi decreases with Q on the rising branch
                i = _bracket_descending(seq, xi)
            else:
                branch, seq = FALLING, self.xi_fall
                if xi < seq[0]:
                    raise OutOfRange(
                        f"xi = {xi} below sampled range (min {seq[0]})")
                i = _bracket_ascending(seq, xi)
            _check_monotone_window(seq, i, xi)

            def delta(q):
                h, s = self._prefix(q)
                return self._assemble(q, branch, h, s).xi - xi

            lo, hi = self.nodes[i], self.nodes[i + 1]
            dlo = delta(lo)
            if dlo == 0:
                Q = lo
            else:
                Q = find_root_bracketed(delta, lo, hi,
                                        tol=gmpy2.exp2(24 - self._wp) * lo,
                                        bits=self._wp)
            h, s = self._prefix(Q)
            return self._assemble(Q, branch, h, s)

    def exponent_A(self, xi) -> mpfr:
        """A(xi); beyond the sampled rising range the closed boundary form
        xi^2/2 - ln(-a4 xi^4 / 4) - 2 takes over (it is the Q -> 0 limit,
        approached as O(1/xi^2))."""
        with workprec(self._wp):
            xi = mpfr(xi)
            if xi > self.xi_rise[0]:
                a4 = mpfr(self.pot.a4)
                return xi * xi / 2 - gmpy2.log(-a4 * xi ** 4 / 4) - 2
        return self.point_by_xi(xi).A


def _bracket_descending(seq, x) -> int:
    lo, hi = 0, len(seq) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if seq[mid] >= x:
            lo = mid
        else:
            hi = mid
    return lo


def _bracket_ascending(seq, x) -> int:
    lo, hi = 0, len(seq) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if seq[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


def _check_monotone_window(seq, i, xi) -> None:
    lo = max(0, i - 2)
    hi = min(len(seq), i + 4)
    window = seq[lo:hi]
    increasing = all(a < b for a, b in zip(window, window[1:]))
    decreasing = all(a > b for a, b in zip(window, window[1:]))
    if not (increasing or decreasing):
        raise NotMonotone(
            f"xi is not locally one-to-one near xi = {xi}; "
            "multivalued profiles are unsupported")


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def euclidean_constants(pot: Potential, bits: int = DEFAULT_PRECISION,
                        grid_points: int = _GRID_POINTS) -> EuclideanConstants:
    """Build the trajectory for pot and return its constants handle."""
    traj = Trajectory(pot, bits=bits, grid_points=grid_points)
    return EuclideanConstants(traj.q_plus, traj.s_infinity, traj.c,
                              traj.tau_turn, bits, traj)


def _trajectory_for(pot: Potential, consts: EuclideanConstants) -> Trajectory:
    traj = consts._trajectory
    if traj.pot is not pot:
        raise ValueError("constants were built for a different potential")
    return traj


def point_of(pot: Potential, consts: EuclideanConstants, *,
             by_Q=None, by_tau=None, by_xi=None) -> EuclideanPoint:
    """Trajectory point selected by coordinate, time, or profile variable.

    Exactly one selector must be given; by_Q is a (Q, branch) pair.
    """
    traj = _trajectory_for(pot, consts)
    given = [v is not None for v in (by_Q, by_tau, by_xi)]
    if sum(given) != 1:
        raise ValueError("provide exactly one of by_Q, by_tau, by_xi")
    if by_Q is not None:
        q, branch = by_Q
        return traj.point_by_Q(q, branch)
    if by_tau is not None:
        return traj.point_by_tau(by_tau)
    return traj.point_by_xi(by_xi)


def exponent_A(pot: Potential, consts: EuclideanConstants, xi) -> mpfr:
    """Decay exponent A(xi) = s/lambda + ln(lambda) - 1 along the bounce."""
    return _trajectory_for(pot, consts).exponent_A(xi)


def _radicand(point: EuclideanPoint) -> mpfr:
    rad = point.Q * point.lambda_dot / 2 - point.lam * point.P
    if rad <= 0:
        raise NegativeRadicand(
            f"Q lam_dot/2 - lam Q_dot = {rad} at Q = {point.Q}")
    return rad


def prefactor_M(pot: Potential, consts: EuclideanConstants, xi,
                n: int = 0) -> mpfr:
    """k-free amplitude of the scaled asymptotic at level n.

    M_n(xi) = e^{(n+1/2) tau} lambda^{(1-n)/2} / (2 pi sqrt(Q lam_dot/2 - lam Q_dot));
    for n = 0 this is the profile the convergence ratio M_k tends to.
    """
    traj = _trajectory_for(pot, consts)
    point = traj.point_by_xi(xi)
    with workprec(traj._wp):
        rad = _radicand(point)
        two_pi = 2 * gmpy2.const_pi()
        return (gmpy2.exp((n + mpfr("0.5")) * point.tau)
                * point.lam ** (mpfr(1 - n) / 2)
                / (two_pi * gmpy2.sqrt(rad)))


def wave_asymptotic(pot: Potential, consts: EuclideanConstants,
                    n: int, k: int, xi) -> AsymptoticValue:
    """Scaled-argument asymptotic of Psi_{n,k}(xi sqrt(k)) as a SignedLog.

    ln value = (n+1/2) tau - ln(2 pi sqrt(k)) - (1/2) ln(Q lam_dot/2 - lam Q_dot)
               + ln k! + (n-1)/2 (ln k - ln lambda) - k A(xi).

    The result carries a warning flag when k xi^2 < 4, where the k xi^2 >> 1
    assumption behind the formula is unreliable.
    """
    if k < 1:
        raise ValueError("asymptotic needs k >= 1")
    traj = _trajectory_for(pot, consts)
    point = traj.point_by_xi(xi)
    with workprec(traj._wp):
        rad = _radicand(point)
        kf = mpfr(k)
        lm = ((n + mpfr("0.5")) * point.tau
              - gmpy2.log(2 * gmpy2.const_pi() * gmpy2.sqrt(kf))
              - gmpy2.log(rad) / 2
              + gmpy2.lngamma(kf + 1)
              + mpfr(n - 1) / 2 * (gmpy2.log(kf) - gmpy2.log(point.lam))
              - kf * point.A)
        warning = bool(kf * point.xi ** 2 < 4)
        return AsymptoticValue(SignedLog(1, lm), warning)
