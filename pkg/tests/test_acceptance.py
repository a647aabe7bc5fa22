"""End-to-end acceptance gate.

One test per headline claim, each asserting the corresponding named
check from the verification battery (the same battery `anharm verify`
runs).  The battery executes once per session; every test reports the
measured detail string on failure, so a red test carries its numbers.

Two checks are expected to be red at the stated tolerances:
decay-exponent-convergence (the profile gap at order 30 is ~0.16, an
order of magnitude above the 0.05 target; it shrinks roughly like
log k / k, which would need k in the thousands) and
matrix-element-trend (the exact/asymptote ratio for <0|x^2|0> grows
like sqrt(k) instead of flattening, so the 20% relative-change band
cannot hold on k = 20..40).  Both assert the stated tolerance anyway;
see the battery details for the measured values.
"""

from __future__ import annotations

import pytest

from anharm.verify import run_battery


@pytest.fixture(scope="module")
def battery():
    return {r.name: r for r in run_battery()}


def check(battery, name):
    res = battery[name]
    assert res.passed, f"{name}: {res.detail}"


def test_01_recursion_matches_operator_oracle(battery):
    check(battery, "recursion-vs-oracle")


def test_02_leading_coefficient_closed_form(battery):
    check(battery, "leading-coefficient-law")


def test_03_trajectory_constants_closed_form(battery):
    check(battery, "euclidean-constants")


def test_04_decay_exponent_profile_converges(battery):
    check(battery, "decay-exponent-convergence")


def test_05_prefactor_profile_converges(battery):
    check(battery, "prefactor-convergence")


def test_06_fixed_argument_profile_converges(battery):
    check(battery, "fixed-x-convergence")


def test_07_energy_growth_asymptote(battery):
    check(battery, "energy-asymptote-ratio")


def test_08_matrix_element_growth_ratio(battery):
    check(battery, "matrix-element-trend")


def test_09_structural_identities(battery):
    check(battery, "structural-invariants")


def test_10_battery_runtime_budget(battery):
    check(battery, "runtime-budget")
