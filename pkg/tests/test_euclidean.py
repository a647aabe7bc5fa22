"""Trajectory quantities against quartic closed forms and FD checks.

For V = Q^2/2 - Q^4 everything is elementary: with u = sqrt(1 - 2Q^2),

    rising:  tau = ln(2Q/(1+u)),      s = (1 - u^3)/6,  P = +Q u
    falling: tau = ln 2 - ln(2Q/(1+u)), s = (1 + u^3)/6, P = -Q u

and Q(tau) = e^tau / (1 + e^{2 tau}/2) covers both branches.  These forms
never touch the package quadrature, so they are a genuine oracle.
"""

from __future__ import annotations

import gmpy2
import pytest
from gmpy2 import mpfr

from anharm.euclidean import (
    AsymptoticValue,
    EuclideanPoint,
    NegativeRadicand,
    NotMonotone,
    OutOfRange,
    _radicand,
    euclidean_constants,
    exponent_A,
    point_of,
    prefactor_M,
    wave_asymptotic,
)
from anharm.numerics import SignedLog, workprec
from anharm.potential import quartic_potential, validate_potential
from anharm.numerics import Rational

POT = quartic_potential()
CONSTS = euclidean_constants(POT, bits=128)


def closed_rising(Q):
    u = gmpy2.sqrt(1 - 2 * Q * Q)
    tau = gmpy2.log(2 * Q / (1 + u))
    s = (1 - u ** 3) / 6
    return tau, s, Q * u


def closed_falling(Q):
    u = gmpy2.sqrt(1 - 2 * Q * Q)
    tau = gmpy2.log(mpfr(2)) - gmpy2.log(2 * Q / (1 + u))
    s = (1 + u ** 3) / 6
    return tau, s, -Q * u


def closed_q_of_tau(tau):
    et = gmpy2.exp(tau)
    return et / (1 + et * et / 2)


class TestConstants:
    def test_quartic_closed_forms(self):
        with workprec(160):
            assert abs(CONSTS.s_infinity - mpfr(1) / 3) < mpfr("1e-30")
            assert abs(CONSTS.c - 2) < mpfr("1e-30")
            assert abs(CONSTS.tau_turn - gmpy2.log(mpfr(2)) / 2) < mpfr("1e-30")
            assert abs(CONSTS.q_plus - gmpy2.sqrt(mpfr("0.5"))) < mpfr("1e-30")

    def test_wrong_potential_rejected(self):
        other = validate_potential({4: Rational(-2)})
        with pytest.raises(ValueError):
            point_of(other, CONSTS, by_tau=0)


class TestPoints:
    def test_turning_point(self):
        p = point_of(POT, CONSTS, by_Q=(CONSTS.q_plus, "rising"))
        with workprec(160):
            assert abs(p.P) < mpfr("1e-20")
            assert abs(p.s - mpfr(1) / 6) < mpfr("1e-30")
            # lam = s - Q P / 2 carries the tiny residual P at the turn
            assert abs(p.lam - mpfr(1) / 6) < mpfr("1e-20")
            assert abs(p.xi - gmpy2.sqrt(mpfr(3))) < mpfr("1e-20")
            assert abs(p.A + gmpy2.log(mpfr(6))) < mpfr("1e-30")

    def test_against_closed_forms(self):
        with workprec(160):
            for q_s in ("0.05", "0.2", "0.44", "0.64", "0.7"):
                Q = mpfr(q_s)
                for branch, oracle in (("rising", closed_rising),
                                       ("falling", closed_falling)):
                    p = point_of(POT, CONSTS, by_Q=(Q, branch))
                    tau, s, P = oracle(Q)
                    assert abs(p.tau - tau) < mpfr("1e-28")
                    assert abs(p.s - s) < mpfr("1e-28")
                    assert abs(p.P - P) < mpfr("1e-28")
                    assert abs(p.lam - (s - Q * P / 2)) < mpfr("1e-28")

    def test_small_q_power_laws(self):
        p = point_of(POT, CONSTS, by_Q=(mpfr("0.02"), "rising"))
        with workprec(160):
            assert abs(p.lam / mpfr("0.02") ** 4 * 4 - 1) < mpfr("0.01")
            assert abs(p.xi * mpfr("0.02") / 2 - 1) < mpfr("0.01")

    def test_by_tau_both_branches(self):
        with workprec(160):
            for tau_s in ("-4", "-1", "0.2", "0.34657", "0.5", "1.5", "4"):
                tau = mpfr(tau_s)
                p = point_of(POT, CONSTS, by_tau=tau)
                assert abs(p.Q - closed_q_of_tau(tau)) < mpfr("1e-25")
                assert abs(p.tau - tau) < mpfr("1e-25")

    def test_by_xi_round_trip(self):
        p = point_of(POT, CONSTS, by_Q=(mpfr("0.5"), "rising"))
        q = point_of(POT, CONSTS, by_xi=p.xi)
        assert q.branch == "rising"
        assert abs(q.Q - mpfr("0.5")) < mpfr("1e-9")
        p = point_of(POT, CONSTS, by_Q=(mpfr("0.3"), "falling"))
        q = point_of(POT, CONSTS, by_xi=p.xi)
        assert q.branch == "falling"
        assert abs(q.Q - mpfr("0.3")) < mpfr("1e-9")

    def test_selector_arity(self):
        with pytest.raises(ValueError):
            point_of(POT, CONSTS)
        with pytest.raises(ValueError):
            point_of(POT, CONSTS, by_tau=0, by_xi=1)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            point_of(POT, CONSTS, by_xi=mpfr("1e-9"))
        with pytest.raises(OutOfRange):
            point_of(POT, CONSTS, by_xi=mpfr("1e8"))
        with pytest.raises(OutOfRange):
            point_of(POT, CONSTS, by_Q=(2, "rising"))


class TestInvariants:
    def test_zero_energy(self):
        with workprec(160):
            for i in range(25):
                tau = mpfr(-5) + i * mpfr("0.22")  # rising side
                p = point_of(POT, CONSTS, by_tau=tau)
                assert abs(p.P * p.P / 2 - POT.value(p.Q)) < mpfr("1e-10")
            for i in range(25):
                tau = CONSTS.tau_turn + mpfr("0.01") + i * mpfr("0.25")
                p = point_of(POT, CONSTS, by_tau=tau)
                assert p.branch == "falling"
                assert abs(p.P * p.P / 2 - POT.value(p.Q)) < mpfr("1e-10")

    def test_ode_second_difference(self):
        with workprec(160):
            h = mpfr("1e-4")
            for tau_s in ("-2", "-0.5", "0.1", "1.0", "2.5"):
                tau = mpfr(tau_s)
                qm = point_of(POT, CONSTS, by_tau=tau - h).Q
                q0 = point_of(POT, CONSTS, by_tau=tau).Q
                qp = point_of(POT, CONSTS, by_tau=tau + h).Q
                acc = (qp - 2 * q0 + qm) / (h * h)
                assert abs(acc - POT.derivative(q0)) < mpfr("1e-6")

    def test_lambda_rate_finite_difference(self):
        with workprec(160):
            h = mpfr("1e-4")
            for tau_s in ("-1.5", "0.0", "0.8", "2.0"):
                tau = mpfr(tau_s)
                lm = point_of(POT, CONSTS, by_tau=tau - h).lam
                p0 = point_of(POT, CONSTS, by_tau=tau)
                lp = point_of(POT, CONSTS, by_tau=tau + h).lam
                assert abs((lp - lm) / (2 * h) - p0.lambda_dot) < mpfr("1e-8")

    def test_falling_lambda_saturates(self):
        p = point_of(POT, CONSTS, by_Q=(mpfr("1e-5"), "falling"))
        assert abs(p.lam - CONSTS.s_infinity) < mpfr("1e-9")

    def test_xi_strictly_decreasing_along_trajectory(self):
        with workprec(160):
            xis = []
            for i in range(41):
                tau = mpfr(-5) + i * mpfr("0.275")
                xis.append(point_of(POT, CONSTS, by_tau=tau).xi)
            assert all(a > b for a, b in zip(xis, xis[1:]))

    def test_scaling_law(self):
        # S(kappa, eta) = -kappa ln(alpha) + alpha S(kappa/alpha, eta/sqrt(alpha))
        with workprec(160):
            def s_fn(kappa, eta):
                p = point_of(POT, CONSTS, by_xi=eta / gmpy2.sqrt(kappa))
                return kappa * (p.s / p.lam + gmpy2.log(p.lam / kappa))

            kappa, eta = mpfr("0.7"), mpfr("1.3")
            lhs = s_fn(kappa, eta)
            rhs = (-kappa * gmpy2.log(mpfr(2))
                   + 2 * s_fn(kappa / 2, eta / gmpy2.sqrt(mpfr(2))))
            assert abs(lhs - rhs) < mpfr("1e-9")

    def test_exponent_positivity(self):
        # f(xi) = A(0) + xi^2/2 - A(xi) >= 0, A(0) = ln(s_infinity)
        with workprec(160):
            a0 = gmpy2.log(CONSTS.s_infinity)
            for i in range(1, 60):
                xi = i * mpfr("0.08")
                f = a0 + xi * xi / 2 - exponent_A(POT, CONSTS, xi)
                assert f >= 0


class TestExponentA:
    def test_turn_value(self):
        with workprec(160):
            a = exponent_A(POT, CONSTS, gmpy2.sqrt(mpfr(3)))
            assert abs(a + gmpy2.log(mpfr(6))) < mpfr("1e-20")

    def test_small_xi_form(self):
        with workprec(160):
            a = exponent_A(POT, CONSTS, mpfr("0.05"))
            ref = gmpy2.log(mpfr(1) / 3) - mpfr("0.05") ** 2 / 2
            assert abs(a - ref) < mpfr("0.01")

    def test_large_xi_form(self):
        with workprec(160):
            a = exponent_A(POT, CONSTS, mpfr(8))
            ref = mpfr(32) - gmpy2.log(mpfr(8) ** 4 / 4) - 2
            assert abs(a / ref - 1) < mpfr("0.01")

    def test_closed_form_continuity_beyond_grid(self):
        # quadrature region and closed form must agree where they meet
        with workprec(160):
            edge = CONSTS._trajectory.xi_rise[0]
            inside = exponent_A(POT, CONSTS, edge * mpfr("0.999"))
            outside = exponent_A(POT, CONSTS, edge * mpfr("1.001"))
            ref_mid = edge * edge / 2 - gmpy2.log(edge ** 4 / 4) - 2
            assert abs(inside / ref_mid - 1) < mpfr("1e-2")
            assert abs(outside / ref_mid - 1) < mpfr("1e-2")


class TestAsymptotic:
    def test_prefactor_at_turn(self):
        with workprec(160):
            m = prefactor_M(POT, CONSTS, gmpy2.sqrt(mpfr(3)))
            ref = 2 / (gmpy2.const_pi() * gmpy2.sqrt(mpfr(6)))
            assert abs(m - ref) < mpfr("1e-3")

    def test_warning_flag(self):
        assert wave_asymptotic(POT, CONSTS, 0, 3, mpfr("0.5")).warning
        assert not wave_asymptotic(POT, CONSTS, 0, 30, mpfr("1.5")).warning

    def test_doubling_consistency(self):
        with workprec(160):
            xi = mpfr("1.2")
            k = 20
            a = exponent_A(POT, CONSTS, xi)
            lm1 = wave_asymptotic(POT, CONSTS, 0, k, xi).value.log_magnitude
            lm2 = wave_asymptotic(POT, CONSTS, 0, 2 * k, xi).value.log_magnitude
            predicted = (gmpy2.lngamma(mpfr(2 * k + 1)) - gmpy2.lngamma(mpfr(k + 1))
                         - k * a
                         - (gmpy2.log(mpfr(2 * k)) - gmpy2.log(mpfr(k))) / 2
                         - (gmpy2.log(gmpy2.sqrt(mpfr(2 * k)))
                            - gmpy2.log(gmpy2.sqrt(mpfr(k)))))
            assert abs((lm2 - lm1) - predicted) < mpfr("1e-9")

    def test_crossover_form(self):
        # deep in the small-xi region the value matches the origin-scaling
        # form built from c and s_infinity
        with workprec(192):
            n, k, xi = 0, 200, mpfr("0.1")
            got = wave_asymptotic(POT, CONSTS, n, k, xi).value.log_magnitude
            kf = mpfr(k)
            ref = (kf * xi * xi / 2 - (n + 1) * gmpy2.log(xi * gmpy2.sqrt(kf))
                   + (n + mpfr("0.5")) * gmpy2.log(CONSTS.c)
                   - gmpy2.log(2 * gmpy2.const_pi())
                   + gmpy2.lngamma(kf + 1) + (n - mpfr("0.5")) * gmpy2.log(kf)
                   - (kf + n + mpfr("0.5")) * gmpy2.log(CONSTS.s_infinity))
            assert abs(got / ref - 1) < mpfr("0.05")

    def test_negative_radicand_surfaced(self):
        fake = EuclideanPoint("rising", mpfr(1), mpfr(1), mpfr(0), mpfr(1),
                              mpfr(1), mpfr(0), mpfr(1), mpfr(0))
        with pytest.raises(NegativeRadicand):
            _radicand(fake)

    def test_result_shape(self):
        av = wave_asymptotic(POT, CONSTS, 1, 10, mpfr("1.0"))
        assert isinstance(av, AsymptoticValue)
        assert isinstance(av.value, SignedLog)
        assert av.value.sign == 1


def test_not_monotone_detection():
    consts = euclidean_constants(POT, bits=64, grid_points=64)
    traj = consts._trajectory
    saved = list(traj.xi_rise)
    try:
        mid = len(traj.xi_rise) // 2
        traj.xi_rise[mid] = traj.xi_rise[mid - 1] * 2  # inject a fold
        with pytest.raises(NotMonotone):
            point_of(POT, consts, by_xi=traj.xi_rise[mid + 1] * mpfr("1.01"))
    finally:
        traj.xi_rise[:] = saved
