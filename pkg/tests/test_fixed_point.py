"""Tests for the fixed-argument profiles X_n and the plain asymptote."""

import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from anharm.euclidean import euclidean_constants, wave_asymptotic
from anharm.fixed_point import (CalE, build_ladder, energy_asymptotic,
                                eval_ladder, eval_ladder_normalized,
                                ode_residual, quartic_energy_asymptotic,
                                wave_fixed_x_asymptotic)
from anharm.numerics import SignedLog, workprec
from anharm.potential import quartic_potential
from anharm.recursion import compute_series, fixed_x_profile


@pytest.fixture(scope="module")
def quartic():
    return quartic_potential()


@pytest.fixture(scope="module")
def consts(quartic):
    return euclidean_constants(quartic, bits=128)


@pytest.fixture(scope="module")
def ladders():
    return {n: build_ladder(n) for n in range(4)}


# ---------------------------------------------------------------------------
# exact structure of the ladder
# ---------------------------------------------------------------------------

def test_ground_triple_is_two_g(ladders):
    L0 = ladders[0]
    assert L0.q == {0: mpq(2)}
    assert not L0.p_tilde
    assert not L0.r
    assert L0.c_tilde == 0


def test_level_one_components(ladders):
    # one ladder step on 2G: q -> 4xG, r -> -2E, then the x-coefficient
    # 4/sqrt(pi) of E forces C_1 = 4/sqrt(pi) via the monic x.
    L1 = ladders[1]
    assert L1.q == {1: mpq(4)}
    assert L1.r == {0: mpq(-2)}
    assert L1.p_tilde == {1: mpq(4)}
    assert L1.c_tilde == 4


def test_small_x_series_of_ground_profile(ladders):
    # X_0 = 2 G e^{-x^2/2} = (2/sqrt(pi)) x^2 - (1/(3 sqrt(pi))) x^4 + ...
    L0 = ladders[0]
    t2 = L0.taylor_coefficient(2)
    t4 = L0.taylor_coefficient(4)
    assert t2 == 2
    assert t4 - t2 / 2 == mpq(-1, 3)


@pytest.mark.parametrize("n", range(8))
def test_normalization_coefficient_vanishes_exactly(n):
    assert build_ladder(n).taylor_coefficient(n) == 0


def test_level_must_be_nonnegative():
    with pytest.raises(ValueError):
        build_ladder(-1)
    with pytest.raises(ValueError):
        CalE(-1)


def test_cal_e_values():
    assert CalE(0).rational == -2
    assert CalE(1).rational == -4
    assert CalE(3).rational == -mpq(8, 3)
    mpmath.mp.dps = 40
    for n in (0, 2, 5):
        ref = -mpmath.mpf(2) ** (n + 1) / (mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))
        ours = CalE(n).to_mpfr(bits=128)
        with workprec(160):
            assert abs(mpfr(str(ref)) - ours) <= abs(ours) * mpfr("1e-30")


def test_cal_e_ladder_identity_exact():
    for n in range(12):
        assert (n + 1) * CalE(n + 1).rational == 2 * CalE(n).rational


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------

def test_eval_matches_twenty_term_taylor(ladders):
    # independent route: the first twenty terms of the G series at x = 1,
    # i.e. powers through x^40
    L0 = ladders[0]
    with workprec(160):
        total = mpfr(0)
        for m in range(0, 41, 2):
            total += L0.taylor_coefficient(m)
        ref = total / gmpy2.sqrt(gmpy2.const_pi()) * gmpy2.exp(mpfr("-0.5"))
        got = eval_ladder(L0, 1, bits=128)
        assert abs(ref - got) <= mpfr("1e-10")


@pytest.mark.parametrize("x", ["0.5", "2.5", "3.5", "4.5", "6.0"])
def test_eval_matches_mpmath_quadrature(ladders, x):
    # crosses the direct/tail split of the G evaluation at 3
    mpmath.mp.dps = 50
    xm = mpmath.mpf(x)
    ref = 2 * mpmath.quad(lambda t: mpmath.exp(t * t) * mpmath.erf(t), [0, xm]) \
        * mpmath.exp(-xm * xm / 2)
    got = eval_ladder(ladders[0], mpfr(x), bits=128)
    with workprec(200):
        assert abs(mpfr(str(ref)) - got) <= abs(got) * mpfr("1e-30")


def test_eval_zero_at_origin_and_parity(ladders):
    assert eval_ladder(ladders[0], 0, bits=96) == 0
    even = eval_ladder(ladders[0], mpfr("1.3"), bits=96)
    assert eval_ladder(ladders[0], mpfr("-1.3"), bits=96) == even
    odd = eval_ladder(ladders[1], mpfr("1.3"), bits=96)
    # sum instead of negating: unary minus would round to the ambient context
    assert eval_ladder(ladders[1], mpfr("-1.3"), bits=96) + odd == 0


@pytest.mark.parametrize("n", [0, 1, 2])
def test_ode_residual_vanishes(ladders, n):
    # -X''/2 + x^2 X/2 - (n+1/2) X = CalE_n Psi_{n,0} at 20 points
    worst = mpfr(0)
    for j in range(20):
        x = mpfr("0.05") + mpq(j, 5)
        worst = max(worst, abs(ode_residual(ladders[n], x, bits=128)))
    assert worst <= mpfr("1e-9")


def test_residual_via_finite_differences(ladders):
    # independent route for X'': central second difference of eval_ladder
    L0 = ladders[0]
    x = mpfr("0.7")
    h = gmpy2.exp2(-18)
    with workprec(320):
        up = eval_ladder(L0, x + h, bits=256)
        mid = eval_ladder(L0, x, bits=256)
        dn = eval_ladder(L0, x - h, bits=256)
        second = (up - 2 * mid + dn) / (h * h)
        source = CalE(0).to_mpfr(256) * gmpy2.exp(-x * x / 2)
        residual = -second / 2 + x * x * mid / 2 - mid / 2 - source
        assert abs(residual) <= mpfr("1e-8")


def test_boundary_growth(ladders):
    # X_n ~ e^{x^2/2}/x^{n+1}; the subleading correction decays like 1/x^2
    # and grows with n, so the highest level is checked further out.
    for n, x in ((0, 6), (1, 6), (2, 9)):
        v = eval_ladder(ladders[n], x, bits=128)
        ratio = v * mpfr(x) ** (n + 1) * gmpy2.exp(-mpfr(x) ** 2 / 2)
        assert ratio > 0
        assert abs(ratio - 1) < mpfr("0.05")
    for x in ("5.0", "5.5", "6.0", "6.5", "7.0"):
        v = eval_ladder(ladders[0], mpfr(x), bits=128)
        ratio = v * mpfr(x) * gmpy2.exp(-mpfr(x) ** 2 / 2)
        assert abs(ratio - 1) < mpfr("0.1")


def test_normalized_profile(ladders):
    # X^_0 starts as x^2 and is what the order-rescaled waves approach
    L0 = ladders[0]
    tiny = eval_ladder_normalized(L0, mpfr("1e-6"), bits=128)
    assert abs(tiny / mpfr("1e-12") - 1) < mpfr("1e-5")
    s = compute_series(quartic_potential(), 0, 16)
    xhat = eval_ladder_normalized(L0, 1, bits=128)
    gaps = [abs(fixed_x_profile(s, k, 1, bits=128) - xhat) for k in (4, 8, 16)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < mpfr("0.01")


@settings(max_examples=20, deadline=None)
@given(n=st.integers(min_value=0, max_value=3),
       num=st.integers(min_value=-38, max_value=38),
       den=st.integers(min_value=10, max_value=20))
def test_ode_residual_property(n, num, den):
    x = mpfr(num) / den
    assert abs(ode_residual(build_ladder(n), x, bits=96)) <= mpfr("1e-9")


# ---------------------------------------------------------------------------
# the large-order asymptote
# ---------------------------------------------------------------------------

def test_energy_asymptote_generic_equals_quartic_closed_form(consts):
    for k in (1, 5, 25, 100):
        generic = energy_asymptotic(consts, 0, k)
        closed = quartic_energy_asymptotic(k)
        assert generic.sign == closed.sign == -1
        diff = abs(generic.log_magnitude - closed.log_magnitude)
        assert diff <= abs(closed.log_magnitude) * mpfr("1e-30")


def test_energy_asymptote_tracks_exact_series(quartic, consts):
    s = compute_series(quartic, 0, 40)
    ratios = {}
    for k in (25, 40):
        r = SignedLog.from_rational(s.energies[k]) / energy_asymptotic(consts, 0, k)
        assert r.sign == 1
        ratios[k] = r.sign * gmpy2.exp(r.log_magnitude)
    assert mpfr("0.8") < ratios[25] < mpfr("1.02")
    assert abs(ratios[40] - 1) < abs(ratios[25] - 1)


def test_asymptote_argument_validation(consts, ladders):
    with pytest.raises(ValueError):
        energy_asymptotic(consts, 0, 0)
    with pytest.raises(ValueError):
        quartic_energy_asymptotic(0)
    with pytest.raises(ValueError):
        wave_fixed_x_asymptotic(consts, ladders[0], 1, 10, 1.0)


def test_wave_asymptote_zero_and_parity(consts, ladders):
    assert wave_fixed_x_asymptotic(consts, ladders[0], 0, 10, 0).sign == 0
    plus = wave_fixed_x_asymptotic(consts, ladders[0], 0, 10, mpfr("1.25"))
    minus = wave_fixed_x_asymptotic(consts, ladders[0], 0, 10, mpfr("-1.25"))
    assert plus.sign == minus.sign == 1
    assert plus.log_magnitude == minus.log_magnitude


def test_matching_window_against_scaled_asymptote(quartic, consts, ladders):
    # x = xi sqrt(k) with k xi^2 = 25 at k = 400 sits where the scaled and
    # fixed-argument forms must both hold; log magnitudes agree to 3%.
    scaled = wave_asymptotic(quartic, consts, 0, 400, mpfr("0.25"))
    fixed = wave_fixed_x_asymptotic(consts, ladders[0], 0, 400, mpfr(5))
    assert not scaled.warning
    assert scaled.value.sign == fixed.sign == 1
    gap = abs(scaled.value.log_magnitude - fixed.log_magnitude)
    assert gap <= abs(fixed.log_magnitude) * mpfr("0.03")
