import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALPHAS, catalog_params
from kendall_walk import fluctuations as fl
from kendall_walk.algebra import DegenerateBranchError, conv_power_cdf, psi
from kendall_walk.steps import KendallStable, SymmetricPareto, SymmetricPoint, Tabulated, catalog

POINT = SymmetricPoint(1.0, 1.0)
CONTINUOUS = [
    pytest.param(law, id=f"{law.family}-a{law.alpha:g}")
    for alpha in ALPHAS
    for law in (SymmetricPareto(alpha), KendallStable(1.0, alpha))
]
LEVELS = (1.5, 3.0)


# -- coefficients ---------------------------------------------------------------------


def test_point_coefficients():
    c = fl.ladder_epoch_coeffs(POINT, 3.0)
    assert (c.a_coef, c.b_coef, c.c_coef) == pytest.approx((2.0, 3.0, -4.0), abs=1e-12)


def test_coefficients_without_h():
    g = 0.3
    c = fl._coefficients(g, 0.0)
    assert (c.a_coef, c.b_coef, c.c_coef) == pytest.approx((1 - g / (2 * g - 1), 0.0, g / (2 * g - 1)), abs=1e-15)


def test_stable_coefficients_match_recurrence_fit():
    law = KendallStable(1.0, 1.0)
    g = math.exp(-0.5)
    assert law.williamson_g(2.0) == pytest.approx(g, abs=1e-15)
    pmf = fl.ladder_epoch_pmf_series(law, 2.0, 3)
    basis = np.array([[0.5**n, n * (1 - g) ** 2 * g ** (n - 1), g ** (n - 1) * (1 - g)] for n in (1, 2, 3)])
    fit = np.linalg.solve(basis, pmf)
    c = fl.ladder_epoch_coeffs(law, 2.0)
    assert (c.a_coef, c.b_coef, c.c_coef) == pytest.approx(tuple(fit), abs=1e-10)


@pytest.mark.parametrize("law", catalog_params())
def test_coefficients_sum_to_one(law):
    for a in LEVELS:
        c = fl.ladder_epoch_coeffs(law, a)
        assert c.a_coef + c.b_coef + c.c_coef == pytest.approx(1.0, abs=1e-12)


def test_coefficients_signal_half_and_one():
    with pytest.raises(DegenerateBranchError) as info:
        fl.ladder_epoch_coeffs(POINT, 2.0)  # G(2) = 1/2
    assert info.value.branch == "G(a)=1/2"
    with pytest.raises(DegenerateBranchError):
        fl._coefficients(1.0, 0.0)


# -- ladder epoch ---------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["closed", "recurrence"])
def test_geometric_epoch_at_zero(mode):
    assert fl.ladder_epoch_pmf(POINT, 0.0, 3, mode) == 1 / 8


@pytest.mark.parametrize("law", catalog_params())
def test_first_epoch_is_step_tail(law):
    for a in (0.5, 1.5, 3.0):
        assert fl.ladder_epoch_pmf(law, a, 1) == pytest.approx(1 - law.cdf(a), abs=1e-14)


def test_point_epoch_two_at_three():
    oracle = 0.5 - 0.5 * (psi(1.0, 1 / 3) * POINT.h(3.0) + POINT.williamson_g(3.0))
    assert oracle == pytest.approx(1 / 18, abs=1e-15)
    for mode in ("closed", "recurrence"):
        assert fl.ladder_epoch_pmf(POINT, 3.0, 2, mode) == pytest.approx(1 / 18, abs=1e-12)


def test_half_level_falls_back_to_recurrence():
    with pytest.raises(DegenerateBranchError):
        fl.ladder_epoch_pmf(POINT, 2.0, 4, strict=True)
    assert fl.ladder_epoch_pmf(POINT, 2.0, 4) == fl.ladder_epoch_pmf(POINT, 2.0, 4, "recurrence")


@pytest.mark.parametrize("law", catalog_params())
def test_epoch_normalization(law):
    for a in (0.0, *LEVELS):
        total = math.fsum(fl.ladder_epoch_pmf_series(law, a, 3000)) if a else 1 - 0.5**3000
        assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("law", catalog_params())
def test_epoch_closed_matches_recurrence(law):
    for a in LEVELS:
        rec = fl.ladder_epoch_pmf_series(law, a, 60)
        for n in range(1, 61):
            assert fl.ladder_epoch_pmf(law, a, n) == pytest.approx(rec[n - 1], abs=1e-9)


@pytest.mark.parametrize("law", catalog_params())
def test_survival_matches_pmf_sums(law):
    surv = fl.survival_below(law, 1.5, 40)
    pmf = fl.ladder_epoch_pmf_series(law, 1.5, 40)
    assert np.allclose(surv, 1 - np.cumsum(pmf), atol=1e-12)


# -- weak descending epoch -------------------------------------------------------------


def test_weak_descending_values():
    assert fl.weak_desc_epoch_pmf(POINT, 3.0, 1) == 1.0
    law = Tabulated([0.0, 2.0], [0.5, 1.0], alpha=1.0)
    assert law.cdf(0.4) == pytest.approx(0.6, abs=1e-15)
    assert fl.weak_desc_epoch_pmf(law, 0.4, 4) == pytest.approx(0.05, abs=1e-15)


@pytest.mark.parametrize("law", catalog_params())
def test_weak_descending_sums_to_one(law):
    f_a = law.cdf(1.5)
    total = math.fsum(fl.weak_desc_epoch_pmf(law, 1.5, n) for n in range(1, 80))
    assert total == pytest.approx(1.0, abs=1e-15)
    for n in range(2, 10):
        assert fl.weak_desc_epoch_pmf(law, 1.5, n) == (1 - f_a) * 0.5 ** (n - 1)


# -- joint ladder law and ladder height ------------------------------------------------


@pytest.mark.parametrize("law", catalog_params())
def test_joint_first_epoch_at_zero(law):
    for t in (0.5, 2.0, 9.0):
        assert fl.joint_ladder_cdf(law, 0.0, 1, t) == pytest.approx(law.cdf(t) - 0.5, abs=1e-15)


def test_joint_point_value():
    assert fl.joint_ladder_cdf(POINT, 0.0, 2, 2.0) == pytest.approx(3 / 16, abs=1e-15)
    assert fl.ladder_epoch_pmf(POINT, 0.0, 2) * (2 * conv_power_cdf(POINT, 2, 2.0) - 1) == 3 / 16


def test_joint_boundaries():
    assert fl.joint_ladder_cdf(POINT, 1.5, 3, 1.5) == 0.0
    assert fl.joint_ladder_cdf(POINT, 1.5, 1, 1.8) == 0.0
    with pytest.raises(ValueError):
        fl.joint_ladder_cdf(POINT, 1.5, 2, 1.0)


@pytest.mark.parametrize("law", catalog_params())
def test_joint_at_zero_factorizes(law):
    for n in range(1, 25):
        for t in (0.5, 1.5, 4.0, 30.0):
            expected = 0.5**n * (2 * conv_power_cdf(law, n, t) - 1)
            for mode in ("closed", "recurrence"):
                assert fl.joint_ladder_cdf(law, 0.0, n, t, mode) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("law", catalog_params())
def test_joint_closed_matches_recurrence(law):
    for a in LEVELS:
        for t in (a + 0.5, 2 * a, 10 * a):
            rec = fl.joint_ladder_series(law, a, t, 30)
            for n in range(1, 31):
                assert fl.joint_ladder_cdf(law, a, n, t) == pytest.approx(rec[n - 1], abs=1e-9)


@pytest.mark.parametrize("law", catalog_params())
def test_joint_sums_to_epoch_law(law):
    # as t grows the joint law approaches the epoch pmf
    for a in LEVELS:
        for n in (1, 2, 5):
            assert fl.joint_ladder_cdf(law, a, n, 1e9) == pytest.approx(fl.ladder_epoch_pmf(law, a, n), abs=1e-6)


@pytest.mark.parametrize("law", CONTINUOUS)
def test_joint_continuous_as_level_shrinks(law):
    for n in (2, 5):
        for t in (2.0, 6.0):
            near = fl.joint_ladder_cdf(law, 1e-4, n, t)
            assert near == pytest.approx(fl.joint_ladder_cdf(law, 0.0, n, t), abs=1e-3)


def test_point_ladder_height_value():
    # (4 F(2) - 2 - G(2)^2) / (2 - G(2))^2 with F(2) = 1 and G(2) = 1/2
    for mode in ("closed", "recurrence"):
        assert fl.ladder_height_cdf(POINT, 0.0, 2.0, mode) == pytest.approx(7 / 9, abs=1e-12)


def test_ladder_height_limits():
    assert fl.ladder_height_cdf(POINT, 0.0, 0.5) == 0.0
    for law in catalog(1.0):
        assert fl.ladder_height_cdf(law, 0.0, 1e6) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("law", catalog_params())
def test_ladder_height_closed_matches_series(law):
    for a in (0.0, *LEVELS):
        for t in (a + 0.5, 2 * a + 1, 10 * a + 1):
            closed = fl.ladder_height_cdf(law, a, t)
            series = fl.ladder_height_cdf(law, a, t, "recurrence")
            assert closed == pytest.approx(series, abs=1e-10 if a == 0 else 1e-9)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.sampled_from(ALPHAS),
    which=st.integers(0, 2),
    a=st.sampled_from([0.0, 0.7, 1.5, 3.0]),
    s=st.floats(0.01, 50),
    ds=st.floats(0.0, 50),
)
def test_ladder_height_cdf_is_monotone(alpha, which, a, s, ds):
    law = catalog(alpha)[which]
    lo = fl.ladder_height_cdf(law, a, a + s)
    hi = fl.ladder_height_cdf(law, a, a + s + ds)
    assert -1e-12 <= lo <= hi + 1e-12 and hi <= 1 + 1e-12


# -- maxima and minima -----------------------------------------------------------------


def test_max_values():
    assert fl.max_cdf(POINT, 0, 2.0) == 1.0
    assert fl.max_cdf(POINT, 2, 3.0) == pytest.approx(17 / 18, abs=1e-12)
    assert fl.max_cdf(POINT, 1, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_min_values():
    assert fl.min_cdf(POINT, 0, -2.0) == 0.0
    assert fl.min_cdf(POINT, 2, -3.0) == pytest.approx(1 / 18, abs=1e-12)
    for law in catalog(1.0):
        for n in (1, 3, 8):
            assert fl.min_cdf(law, n, -1e6) <= n * (1 - law.cdf(1e6)) + 1e-9
    with pytest.raises(ValueError):
        fl.min_cdf(POINT, 2, 0.0)


@pytest.mark.parametrize("law", catalog_params())
def test_max_is_epoch_survival(law):
    for t in (0.5, 1.5, 3.0, 20.0):
        pmf = fl.ladder_epoch_pmf_series(law, t, 30)
        for n in range(0, 31):
            expected = 1 - math.fsum(pmf[:n])
            assert fl.max_cdf(law, n, t) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("law", catalog_params())
def test_extremes_closed_match_recurrence(law):
    for t in (0.5, 1.5, 3.0, 20.0):
        for n in range(0, 40):
            assert fl.max_cdf(law, n, t) == pytest.approx(fl.max_cdf(law, n, t, "recurrence"), abs=1e-9)
            assert fl.min_cdf(law, n, -t) == pytest.approx(fl.min_cdf(law, n, -t, "recurrence"), abs=1e-9)


@pytest.mark.parametrize("law", CONTINUOUS)
def test_min_max_symmetry(law):
    for t in (0.3, 1.5, 3.0, 20.0):
        for n in range(0, 21):
            assert fl.min_cdf(law, n, -t) == pytest.approx(1 - fl.max_cdf(law, n, t), abs=1e-9)


def test_min_recursion_state():
    law = SymmetricPareto(1.0)
    g, h = law.williamson_g(3.0), law.h(3.0)
    state = fl.MinRecursionState(0.5, 0.5 * h, 0.5 * g)
    for j in range(1, 30):
        assert state.a_j == 0.5**j
        assert 1 - state.survival_at_origin == pytest.approx(fl.min_cdf(law, j, -3.0), abs=1e-12)
        state.advance(g, h)


@settings(max_examples=50, deadline=None)
@given(alpha=st.sampled_from(ALPHAS), which=st.integers(0, 2), t=st.floats(0.05, 100), n=st.integers(0, 40))
def test_extremes_monotone_in_n(alpha, which, t, n):
    law = catalog(alpha)[which]
    assert fl.max_cdf(law, n + 1, t) <= fl.max_cdf(law, n, t) + 1e-12
    assert fl.min_cdf(law, n, -t) <= fl.min_cdf(law, n + 1, -t) + 1e-12
    assert fl.max_cdf(law, n, t) <= fl.max_cdf(law, n, 1.5 * t) + 1e-12
