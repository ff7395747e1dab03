import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from conftest import ALPHAS, catalog_params, ks_critical, ks_distance
from kendall_walk.steps import (
    KendallStable,
    SymmetricPareto,
    SymmetricPoint,
    Tabulated,
    abs_moment,
    catalog,
    cdf,
    h_fn,
    invert_williamson,
    sample_step,
    williamson_g,
)

STABLE_F2 = 0.5 + 0.5 * 1.5 * math.exp(-0.5)


# -- worked values -----------------------------------------------------------------


def test_point_cdf_has_no_mass_inside_unit_interval():
    assert cdf(SymmetricPoint(1.0, 1.0), 0.5) == 0.5


def test_stable_cdf_matches_closed_form():
    assert cdf(KendallStable(1.0, 1.0), 2.0) == pytest.approx(0.954897, abs=1e-6)


def test_pareto_cdf_against_density_quadrature():
    tail, _ = integrate.quad(lambda y: y**-3, 2.0, np.inf)
    assert cdf(SymmetricPareto(1.0), 2.0) == pytest.approx(1.0 - tail, abs=1e-12)
    assert cdf(SymmetricPareto(1.0), 2.0) == 0.875


@pytest.mark.parametrize(
    "law, t, expected",
    [
        (SymmetricPoint(1.0, 1.0), 2.0, 0.5),
        (SymmetricPoint(1.0, 1.0), 1.0, 0.0),
        (SymmetricPareto(1.0), 2.0, 0.25),
        (KendallStable(1.0, 1.0), 2.0, math.exp(-0.5)),
    ],
)
def test_williamson_g_values(law, t, expected):
    assert williamson_g(law, t) == pytest.approx(expected, abs=1e-15)


def test_pareto_g_against_psi_quadrature():
    law = SymmetricPareto(1.0)
    oracle = abs_moment(law, lambda x: 1.0 - x / 2.0, 2.0)
    assert williamson_g(law, 2.0) == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize(
    "law, t, expected",
    [
        (SymmetricPoint(1.0, 1.0), 3.0, 1.0 / 3.0),
        (KendallStable(1.0, 1.0), 2.0, 0.5 * math.exp(-0.5)),
    ],
)
def test_h_values(law, t, expected):
    assert h_fn(law, t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("law", catalog_params())
def test_h_vanishes_at_infinity(law):
    assert h_fn(law, 1e6) <= law.m_alpha * 1e-6**law.alpha + 1e-9


@pytest.mark.parametrize("fn", [williamson_g, h_fn])
def test_g_and_h_reject_nonpositive_t(fn):
    with pytest.raises(ValueError):
        fn(SymmetricPareto(1.0), 0.0)


@pytest.mark.parametrize(
    "g, t, expected",
    [
        (lambda t: 1.0, 1.0, 1.0),
        (lambda t: math.exp(-1.0 / t), 2.0, STABLE_F2),
        (lambda t: max(1.0 - 1.0 / t, 0.0), 3.0, 1.0),
    ],
    ids=["delta0", "stable", "two-point"],
)
def test_invert_williamson_values(g, t, expected):
    assert invert_williamson(g, 1.0, t) == pytest.approx(expected, abs=1e-8)


def test_invert_williamson_negative_side_by_symmetry():
    g = lambda t: math.exp(-1.0 / t)
    assert invert_williamson(g, 1.0, -2.0) == pytest.approx(1.0 - STABLE_F2, abs=1e-8)


def test_invert_williamson_rejects_zero():
    with pytest.raises(ValueError):
        invert_williamson(lambda t: 1.0, 1.0, 0.0)


def test_invert_williamson_rejects_decreasing_g():
    with pytest.raises(ValueError):
        invert_williamson(lambda t: math.exp(-t), 1.0, 2.0)


# -- invariants --------------------------------------------------------------------

GRID = np.logspace(-1, 2, 50)


@pytest.mark.parametrize("law", catalog_params())
def test_round_trip_inversion(law):
    errs = [
        abs(invert_williamson(lambda s: williamson_g(law, s), law.alpha, t) - cdf(law, t))
        for t in GRID
        if abs(t - 1.0) > 1e-4  # continuity points only
    ]
    assert max(errs) < 1e-6


@pytest.mark.parametrize("law", catalog_params())
def test_h_identity_against_moment_quadrature(law):
    for t in GRID:
        oracle = t ** (-law.alpha) * abs_moment(law, lambda x: x**law.alpha, t)
        assert h_fn(law, t) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("law", catalog_params())
def test_g_monotone_and_bounded(law):
    g = np.array([williamson_g(law, t) for t in GRID])
    assert np.all((g >= 0.0) & (g <= 1.0))
    assert np.all(np.diff(g) >= 0.0)


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.sampled_from(ALPHAS),
    which=st.integers(0, 2),
    t=st.floats(0.01, 1e4, allow_nan=False),
)
def test_symmetry_and_h_range(alpha, which, t):
    law = catalog(alpha)[which]
    if which == 0 and t == 1.0:
        return
    assert cdf(law, t) + cdf(law, -t) == pytest.approx(1.0, abs=1e-14)
    h = h_fn(law, t)
    assert -1e-15 <= h <= 1.0
    assert h + williamson_g(law, t) <= 1.0 + 1e-15


# -- samplers ----------------------------------------------------------------------

N_DRAWS = 10**6


def test_point_sampler_support():
    draws = sample_step(SymmetricPoint(1.0, 1.0), np.random.default_rng(1), 10**4)
    assert np.mean(np.abs(draws)) == 1.0


def test_pareto_sampler_tail():
    draws = sample_step(SymmetricPareto(1.0), np.random.default_rng(2), N_DRAWS)
    p = np.mean(np.abs(draws) > 2.0)
    assert abs(p - 0.25) < 3 * math.sqrt(0.25 * 0.75 / N_DRAWS)


def test_stable_sampler_cdf_at_two():
    draws = sample_step(KendallStable(1.0, 1.0), np.random.default_rng(3), N_DRAWS)
    p = np.mean(draws <= 2.0)
    assert abs(p - STABLE_F2) < 3 * math.sqrt(STABLE_F2 * (1 - STABLE_F2) / N_DRAWS)


@pytest.mark.parametrize("law", catalog_params())
def test_sampler_ks(law):
    draws = sample_step(law, np.random.default_rng(4), N_DRAWS)
    fcdf = law.cdf
    # P(X < x) = 1 - P(X <= -x) for a symmetric law
    d = ks_distance(draws, fcdf, lambda x: 1.0 - fcdf(-x))
    assert d < ks_critical(N_DRAWS)


# -- tabulated laws ----------------------------------------------------------------


def test_tabulated_exact_for_piecewise_linear_cdf():
    # uniform on [-2, 2]: F(t) = 1/2 + t/4
    law = Tabulated([0.0, 2.0], [0.5, 1.0], alpha=1.0)
    assert cdf(law, 1.0) == 0.75
    # G(t) = int (1 - |x|/t)_+ dnu = 1 - 1/t for t >= 2
    assert williamson_g(law, 4.0) == pytest.approx(0.75, abs=1e-15)
    assert williamson_g(law, 1.0) == pytest.approx(abs_moment(law, lambda x: 1.0 - x, 1.0), abs=1e-10)


def test_tabulated_from_pareto_approximates_closed_form():
    base = SymmetricPareto(1.0)
    law = Tabulated.from_law(base, np.concatenate([[0.0], np.geomspace(1.0, 400.0, 4000)]))
    for t in (1.5, 3.0, 10.0):
        assert williamson_g(law, t) == pytest.approx(williamson_g(base, t), abs=2e-4)
        assert h_fn(law, t) == pytest.approx(h_fn(base, t), abs=2e-4)


def test_tabulated_sampler_ks():
    law = Tabulated([0.0, 1.0, 3.0], [0.5, 0.6, 1.0], alpha=1.0)
    draws = sample_step(law, np.random.default_rng(5), 10**5)
    assert ks_distance(draws, law.cdf) < ks_critical(10**5)


@pytest.mark.parametrize(
    "t, F",
    [([0.0, 1.0], [0.5, 0.9]), ([0.0, 1.0, 0.5], [0.5, 0.7, 1.0]), ([0.0, 1.0, 2.0], [0.5, 0.8, 0.7])],
    ids=["not-normalized", "unsorted", "decreasing"],
)
def test_tabulated_rejects_bad_tables(t, F):
    with pytest.raises(ValueError):
        Tabulated(t, F, alpha=1.0)
