import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefmono import (
    BINARY,
    REAL_LINE,
    UNIT_INTERVAL,
    ComparisonDomain,
    LossFamily,
    RootLaw,
    check_assumption_cross,
    check_assumption_max,
    cumulant,
    cumulant_prime,
    d2loss_ds2,
    dcds_cross,
    dloss_ds,
    loss_value,
)
from prefmono.errors import DomainViolationError, InputError, NondifferentiableError, UnsupportedOperationError
from prefmono.losses import cumulant_second

from helpers import central_difference

SMOOTH = {
    "bradley_terry": LossFamily.bradley_terry(),
    "uniform_gbt": LossFamily.uniform_gbt(),
    "gaussian_gbt": LossFamily.gaussian_gbt(),
    "ipo": LossFamily.ipo(),
}


def random_pairs(family, rng, n=200):
    s = rng.uniform(-6, 6, n)
    dom = family.domain
    if dom.kind == "discrete":
        c = rng.choice(dom.values, n)
    elif dom.kind == "interval":
        c = rng.uniform(dom.lo, dom.hi, n)
    else:
        c = rng.normal(0, 2, n)
    return s, c


# ---- examples -------------------------------------------------------------


def test_loss_value_examples():
    assert loss_value(LossFamily.bradley_terry(), 0.0, 1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert loss_value(LossFamily.gaussian_gbt(), 1.0, 1.0) == -0.5
    assert loss_value(LossFamily.uniform_gbt(), 0.0, 0.3) == 0.0
    assert loss_value(LossFamily.ipo(), 2.0, 1.0) == 1.0


def test_first_derivative_examples():
    assert dloss_ds(LossFamily.bradley_terry(), 0.0, 1.0) == -0.5
    assert dloss_ds(LossFamily.gaussian_gbt(), 0.0, 1.0) == -1.0
    assert dloss_ds(LossFamily.uniform_gbt(), 0.0, 1.0) == -1.0


def test_second_derivative_examples():
    assert d2loss_ds2(LossFamily.bradley_terry(), 0.0, 1.0) == 0.25
    for s, c in [(-3.0, 0.5), (0.0, -2.0), (7.0, 10.0)]:
        assert d2loss_ds2(LossFamily.gaussian_gbt(), s, c) == 1.0
    assert d2loss_ds2(LossFamily.ipo(), 0.3, -1.0) == 2.0


def test_cross_partial_examples():
    assert dcds_cross(LossFamily.gaussian_gbt(), 3.0, 0.2) == -1.0
    assert dcds_cross(LossFamily.uniform_gbt(), -1.0, 0.0) == -1.0
    tab = LossFamily.gbt(RootLaw.tabulated(np.linspace(-1, 1, 11), np.ones(11)))
    assert dcds_cross(tab, 0.7, 0.4) == -1.0


def test_cross_partial_unsupported_on_discrete_domain():
    for fam in (LossFamily.bradley_terry(), LossFamily.ipo(), LossFamily.slic()):
        with pytest.raises(UnsupportedOperationError):
            dcds_cross(fam, 0.0, 1.0)


def test_cumulant_examples():
    assert cumulant(RootLaw.uniform(), 0.0) == 0.0
    assert cumulant_prime(RootLaw.two_point(), 0.0) == 0.0
    vals = [cumulant_prime(RootLaw.uniform(), s) for s in (-20, -5, -1, 1, 5, 20)]
    assert all(-1 < v < 1 for v in vals)
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for s in (1, 5, 20):
        assert cumulant_prime(RootLaw.uniform(), s) == -cumulant_prime(RootLaw.uniform(), -s)


def test_tabulated_uniform_matches_closed_form():
    grid = np.linspace(-1, 1, 2001)
    tab = RootLaw.tabulated(grid, np.ones_like(grid))
    assert abs(cumulant(tab, 2.0) - math.log(math.sinh(2) / 2)) < 1e-4
    assert abs(cumulant_prime(tab, 2.0) - cumulant_prime(RootLaw.uniform(), 2.0)) < 1e-4


def test_tabulated_survives_large_arguments():
    grid = np.linspace(-1, 1, 101)
    tab = RootLaw.tabulated(grid, np.ones_like(grid))
    for s in (-700.0, 700.0):
        assert math.isfinite(cumulant(tab, s))
        assert abs(abs(cumulant_prime(tab, s)) - 1) < 1e-2


def test_closed_forms():
    for s in (-3.0, -0.5, 0.2, 4.0):
        assert cumulant(RootLaw.two_point(), s) == pytest.approx(math.log(math.cosh(s)), rel=1e-14)
        assert cumulant_prime(RootLaw.two_point(), s) == pytest.approx(math.tanh(s), rel=1e-14)
        assert cumulant(RootLaw.gaussian(), s) == pytest.approx(s * s / 2, rel=1e-15)
        assert cumulant(RootLaw.uniform(), s) == pytest.approx(math.log(math.sinh(s) / s), rel=1e-12)
        assert cumulant_prime(RootLaw.uniform(), s) == pytest.approx(1 / math.tanh(s) - 1 / s, rel=1e-12)


def test_uniform_cumulant_near_zero_is_smooth():
    # series branch and closed form agree across the switch point
    for s in (0.049, 0.0499999, 0.0500001, 0.051):
        exact = math.log(math.sinh(s) / s)
        assert cumulant(RootLaw.uniform(), s) == pytest.approx(exact, rel=1e-10)
        assert cumulant_prime(RootLaw.uniform(), s) == pytest.approx(1 / math.tanh(s) - 1 / s, rel=1e-9)
    assert cumulant(RootLaw.uniform(), 1e-8) == pytest.approx(1e-16 / 6, rel=1e-12)


def test_cumulant_extreme_arguments_are_finite():
    for root in (RootLaw.two_point(), RootLaw.uniform()):
        for s in (-1e4, 1e4):
            assert math.isfinite(cumulant(root, s))
            assert abs(cumulant_prime(root, s)) <= 1


# ---- errors ---------------------------------------------------------------


def test_domain_violation():
    with pytest.raises(DomainViolationError):
        loss_value(LossFamily.bradley_terry(), 0.0, 0.5)
    with pytest.raises(DomainViolationError):
        dloss_ds(LossFamily.uniform_gbt(), 0.0, 1.5)


def test_nonfinite_score_rejected():
    with pytest.raises(InputError):
        loss_value(LossFamily.gaussian_gbt(), math.nan, 0.0)
    with pytest.raises(InputError):
        dloss_ds(LossFamily.bradley_terry(), math.inf, 1.0)


def test_slic_kink_is_declared():
    slic = LossFamily.slic()
    assert loss_value(slic, 1.0, 1.0) == 0.0
    with pytest.raises(NondifferentiableError):
        dloss_ds(slic, 1.0, 1.0)
    with pytest.raises(NondifferentiableError):
        d2loss_ds2(slic, -1.0, -1.0)
    assert dloss_ds(slic, 0.5, 1.0) == -1.0
    assert dloss_ds(slic, 1.5, 1.0) == 0.0


def test_domain_invariants():
    with pytest.raises(InputError):
        ComparisonDomain.discrete((-1.0, 0.5))
    with pytest.raises(InputError):
        ComparisonDomain.interval(-1.0, 2.0)
    with pytest.raises(InputError):
        ComparisonDomain.discrete(())
    assert BINARY.has_max and BINARY.max == 1.0
    assert UNIT_INTERVAL.has_max and UNIT_INTERVAL.min == -1.0
    assert not REAL_LINE.has_max


def test_projection_ties_follow_push_direction():
    assert BINARY.project(0.0, +1) == 1.0
    assert BINARY.project(0.0, -1) == -1.0
    assert BINARY.project(0.4, -1) == 1.0
    assert UNIT_INTERVAL.project(1.1) == 1.0
    assert REAL_LINE.project(12.5) == 12.5


def test_family_serialization_roundtrip():
    fams = [LossFamily.bradley_terry(), LossFamily.uniform_gbt(), LossFamily.ipo(),
            LossFamily.gbt(RootLaw.tabulated([-0.5, 0.0, 0.5], [1.0, 2.0, 1.0]))]
    for fam in fams:
        assert LossFamily.from_dict(fam.to_dict()) == fam


# ---- properties -----------------------------------------------------------


@pytest.mark.parametrize("name", sorted(SMOOTH))
def test_derivatives_match_finite_differences(name, rng):
    fam = SMOOTH[name]
    s, c = random_pairs(fam, rng)
    for si, ci in zip(s, c):
        d1 = dloss_ds(fam, si, ci)
        fd1 = central_difference(lambda t: loss_value(fam, t, ci), si)
        assert abs(d1 - fd1) <= 1e-6 * max(abs(d1), 1e-3)
        d2 = d2loss_ds2(fam, si, ci)
        fd2 = central_difference(lambda t: dloss_ds(fam, t, ci), si)
        assert abs(d2 - fd2) <= 1e-6 * max(abs(d2), 1e-3)


def test_slic_derivative_away_from_kink(rng):
    fam = LossFamily.slic()
    s, c = random_pairs(fam, rng)
    for si, ci in zip(s, c):
        if abs(si - 1 / ci) < 1e-3:
            continue
        fd = central_difference(lambda t: loss_value(fam, t, ci), si)
        assert dloss_ds(fam, si, ci) == pytest.approx(fd, abs=1e-8)


ROOTS = [RootLaw.two_point(), RootLaw.uniform(), RootLaw.gaussian(),
         RootLaw.tabulated(np.linspace(-1, 1, 201), np.exp(-np.linspace(-1, 1, 201) ** 2))]


@pytest.mark.parametrize("root", ROOTS, ids=lambda r: r.kind)
@settings(max_examples=60, deadline=None)
@given(s=st.floats(-30, 30))
def test_cumulant_prime_is_odd(root, s):
    assert abs(cumulant_prime(root, s) + cumulant_prime(root, -s)) < 1e-10


@pytest.mark.parametrize("root", ROOTS, ids=lambda r: r.kind)
def test_cumulant_prime_increasing_and_bounded(root):
    grid = np.linspace(-15, 15, 301)
    vals = np.array([cumulant_prime(root, s) for s in grid])
    assert np.all(np.diff(vals) > 0)
    dom = root.domain
    if dom.has_max:
        assert np.all(vals < dom.max) and np.all(vals > dom.min)


@pytest.mark.parametrize("root", ROOTS, ids=lambda r: r.kind)
def test_cumulant_second_matches_finite_difference(root):
    for s in (-4.0, -0.3, 0.01, 2.5):
        fd = central_difference(lambda t: cumulant_prime(root, t), s)
        assert cumulant_second(root, s) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("fam", [LossFamily.uniform_gbt(), LossFamily.gaussian_gbt(),
                                 LossFamily.gbt(ROOTS[3])], ids=lambda f: f.kind)
@settings(max_examples=50, deadline=None)
@given(s=st.floats(-50, 50), u=st.floats(-0.999, 0.999))
def test_gbt_cross_partial_is_minus_one(fam, s, u):
    c = u if fam.domain.has_max else 10 * u
    assert dcds_cross(fam, s, c) == -1.0


@settings(max_examples=100, deadline=None)
@given(s=st.floats(-100, 100), c=st.floats(-100, 100))
def test_gaussian_loss_rewriting(s, c):
    fam = LossFamily.gaussian_gbt()
    assert abs(loss_value(fam, s, c) - (0.5 * (s - c) ** 2 - 0.5 * c * c)) <= 1e-12 * max(1.0, s * s, c * c)


# ---- assumption checks ----------------------------------------------------


def test_assumption_max_holds_for_bradley_terry():
    v = check_assumption_max(LossFamily.bradley_terry(), np.linspace(-10, 10, 201))
    assert v.status == "holds" and v.violations == ()


def test_assumption_max_violated_for_ipo_at_two():
    v = check_assumption_max(LossFamily.ipo(), [0.0, 2.0])
    assert v.status == "violated"
    assert (2.0, 2.0) in v.violations
    assert all(s > 1 for s, _ in v.violations)


def test_assumption_max_no_maximum_for_gaussian():
    assert check_assumption_max(LossFamily.gaussian_gbt()).status == "no_maximum"


def test_assumption_max_bounded_gbt_and_slic():
    assert check_assumption_max(LossFamily.uniform_gbt()).holds
    assert check_assumption_max(LossFamily.gbt(ROOTS[3])).holds
    v = check_assumption_max(LossFamily.slic())
    assert v.status == "violated"
    assert any(s > 1 and d == 0 for s, d in v.violations)


def test_assumption_cross():
    assert check_assumption_cross(LossFamily.uniform_gbt()).holds
    assert not check_assumption_cross(LossFamily.bradley_terry()).holds
