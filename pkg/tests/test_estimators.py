import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from censored_hill.errors import DomainError, EstimationError
from censored_hill.estimators import (
    SortedSample,
    adapted_hill,
    adapted_hill_variance,
    asymptotic_ci,
    hill,
    hill_plot,
    kaplan_meier_survival,
    premium_estimate,
    premium_se,
    premium_variance,
    sort_with_concomitants,
    uncensored_fraction,
)
from censored_hill.models import CensoredSample

from conftest import hill_oracle, km_oracle


def make(z, d):
    return sort_with_concomitants(CensoredSample(np.asarray(z, float), np.asarray(d)))


FIXTURE = make([1, 2, 4, 8], [1, 1, 1, 1])
KM_FIXTURE = make([1, 2, 3], [1, 0, 1])

positive_z = hnp.arrays(
    np.float64, st.integers(2, 60),
    elements=st.floats(1e-3, 1e6, allow_nan=False, allow_infinity=False),
)


@st.composite
def censored_samples(draw, min_size=2, max_size=60):
    n = draw(st.integers(min_size, max_size))
    z = draw(hnp.arrays(np.float64, n, elements=st.floats(1e-3, 1e6)))
    d = draw(hnp.arrays(np.bool_, n))
    return make(z, d)


# -- sorting -------------------------------------------------------------------

def test_sort_example():
    s = make([3, 1, 2], [1, 0, 1])
    assert s.z_sorted.tolist() == [1, 2, 3]
    assert s.delta_concomitant.tolist() == [False, True, True]


def test_sort_idempotent():
    s = make([1, 2, 3, 4], [0, 1, 1, 0])
    t = make(s.z_sorted, s.delta_concomitant)
    assert np.array_equal(s.z_sorted, t.z_sorted)
    assert np.array_equal(s.delta_concomitant, t.delta_concomitant)


def test_sort_ties_stable():
    assert make([2, 2], [0, 1]).delta_concomitant.tolist() == [False, True]
    assert make([2, 2], [1, 0]).delta_concomitant.tolist() == [True, False]


@settings(max_examples=200, deadline=None)
@given(censored_samples(min_size=1))
def test_sort_output_non_decreasing(s):
    z = s.z_sorted
    assert np.all(np.diff(z) >= 0)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_sort_carries_concomitants(data):
    n = data.draw(st.integers(1, 40))
    z = data.draw(hnp.arrays(np.float64, n, elements=st.sampled_from([1.0, 2.0, 3.0, 5.5, 7.0])))
    d = data.draw(hnp.arrays(np.bool_, n))
    s = make(z, d)
    expected = sorted(zip(z.tolist(), range(n)))
    assert s.z_sorted.tolist() == [v for v, _ in expected]
    assert s.delta_concomitant.tolist() == [bool(d[i]) for _, i in expected]


# -- Hill ------------------------------------------------------------------------

def test_hill_fixture():
    assert hill(FIXTURE, 2) == pytest.approx(1.5 * math.log(2), abs=1e-12)
    assert hill(FIXTURE, 2) == pytest.approx(1.0397207708, abs=1e-10)


def test_hill_constant_sample():
    assert hill(make([3.0] * 10, [1] * 10), 4) == 0.0


@settings(max_examples=200, deadline=None)
@given(positive_z, st.floats(1e-3, 1e3))
def test_hill_scale_invariant(z, c):
    s = make(z, np.ones(z.size))
    sc = make(z * c, np.ones(z.size))
    for k in range(1, z.size):
        assert hill(sc, k) == pytest.approx(hill(s, k), rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(positive_z)
def test_hill_matches_oracle_and_nonnegative(z):
    s = make(z, np.ones(z.size))
    for k in range(1, z.size):
        h = hill(s, k)
        assert h >= 0
        assert h == pytest.approx(hill_oracle(s.z_sorted.tolist(), k), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("k", [0, 4, -1, 2.5])
def test_hill_k_range(k):
    with pytest.raises(DomainError):
        hill(FIXTURE, k)


# -- uncensored fraction and adapted Hill ---------------------------------------------

def test_uncensored_fraction_examples():
    assert uncensored_fraction(make([1, 2, 3, 4], [1, 1, 1, 0]), 2) == 0.5
    all_one = make([1, 2, 3, 4, 5], [1] * 5)
    assert all(uncensored_fraction(all_one, k) == 1.0 for k in range(1, 5))
    assert uncensored_fraction(make([1, 2, 3], [0, 0, 0]), 2) == 0.0


def test_adapted_hill_example():
    s = make([1, 2, 4, 8], [1, 1, 1, 0])
    assert adapted_hill(s, 2) == pytest.approx(3 * math.log(2), abs=1e-12)
    assert adapted_hill(s, 2) == pytest.approx(2.0794415417, abs=1e-10)


def test_adapted_hill_no_uncensored_extremes():
    s = make([1, 2, 4, 8], [1, 1, 0, 0])
    with pytest.raises(EstimationError, match="no uncensored extreme observations"):
        adapted_hill(s, 2)


@settings(max_examples=200, deadline=None)
@given(censored_samples())
def test_adapted_hill_is_exact_quotient(s):
    for k in range(1, s.n):
        p = uncensored_fraction(s, k)
        if p == 0:
            continue
        assert adapted_hill(s, k) == hill(s, k) / p


@settings(max_examples=200, deadline=None)
@given(positive_z)
def test_adapted_hill_reduces_without_censoring(z):
    s = make(z, np.ones(z.size, dtype=bool))
    for k in range(1, s.n):
        assert adapted_hill(s, k) == hill(s, k)


# -- Kaplan-Meier --------------------------------------------------------------------

def test_km_fixture():
    assert kaplan_meier_survival(KM_FIXTURE, 2, exact=True) == Fraction(2, 3) == km_oracle([1, 0, 1], 2)
    assert kaplan_meier_survival(KM_FIXTURE, 3, exact=True) == 0
    assert kaplan_meier_survival(KM_FIXTURE, 2) == 2 / 3
    assert kaplan_meier_survival(KM_FIXTURE, 3) == 0.0
    assert kaplan_meier_survival(KM_FIXTURE, 0) == 1.0


@settings(max_examples=300, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=40))
def test_km_matches_rational_oracle(delta):
    n = len(delta)
    s = SortedSample(np.arange(1.0, n + 1), np.array(delta))
    prev = 1.0
    for m in range(n + 1):
        v = kaplan_meier_survival(s, m)
        exact = km_oracle(delta, m)
        assert kaplan_meier_survival(s, m, exact=True) == exact
        # Fraction(v) is the exact binary value; it must be the correctly rounded oracle.
        assert abs(Fraction(v) - exact) <= Fraction(1, 2 ** 50) * max(exact, Fraction(1, 2 ** 1000))
        assert 0.0 <= v <= prev
        prev = v


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500))
def test_km_equals_empirical_survival_without_censoring(n):
    s = SortedSample(np.arange(1.0, n + 1), np.ones(n, dtype=bool))
    for m in range(n + 1):
        assert kaplan_meier_survival(s, m) == (n - m) / n


@pytest.mark.parametrize("m", [-1, 4, 1.5])
def test_km_range(m):
    with pytest.raises(DomainError):
        kaplan_meier_survival(KM_FIXTURE, m)


# -- confidence interval ------------------------------------------------------------

def test_ci_uncensored_reduction():
    rng = np.random.default_rng(1)
    s = make(rng.pareto(2.0, 1000) + 1, np.ones(1000))
    fit = asymptotic_ci(s, 100)
    assert fit.p_hat == 1.0
    assert fit.se == pytest.approx(fit.gamma1_hat / 10, rel=1e-14)


def test_ci_plug_in_standard_error():
    # se = gamma1_hat / sqrt(p_hat k); p_hat = 0.6 and k = 5 here.
    s = make([1, 2, 3, 4, 5, 6, 7], [1, 1, 1, 0, 1, 0, 1])
    fit = asymptotic_ci(s, 5)
    assert fit.p_hat == pytest.approx(0.6)
    assert fit.se == pytest.approx(fit.gamma1_hat / math.sqrt(3.0), rel=1e-14)
    z = 1.959963984540054
    assert fit.ci_low == pytest.approx(fit.gamma1_hat - z * fit.se, rel=1e-12)
    assert fit.ci_high == pytest.approx(fit.gamma1_hat + z * fit.se, rel=1e-12)


def test_ci_collapses_as_alpha_to_one():
    s = make([1, 2, 3, 4, 5, 6, 7], [1, 1, 1, 0, 1, 0, 1])
    fit = asymptotic_ci(s, 5, alpha=1 - 1e-12)
    assert fit.ci_high - fit.ci_low < 1e-10


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_ci_alpha_range(alpha):
    with pytest.raises(DomainError):
        asymptotic_ci(FIXTURE, 2, alpha)


@settings(max_examples=200, deadline=None)
@given(censored_samples(), st.floats(0.001, 0.999))
def test_ci_contains_estimate(s, alpha):
    for k in range(1, s.n):
        try:
            fit = asymptotic_ci(s, k, alpha)
        except EstimationError:
            assert uncensored_fraction(s, k) == 0
            continue
        assert fit.ci_low <= fit.gamma1_hat <= fit.ci_high
        assert fit.gamma1_hat == fit.gamma_hat_z / fit.p_hat


def test_tailfit_serializes_k_source():
    d = asymptotic_ci(FIXTURE, 2, k_source="user").to_dict()
    assert d["k_source"] == "user"
    assert set(d) >= {"k", "gamma_hat_z", "p_hat", "gamma1_hat", "se", "ci_low", "ci_high", "alpha"}


def test_hill_plot_marks_failures():
    s = make([1, 2, 3, 4, 5], [1, 1, 1, 0, 0])
    fits = hill_plot(s, [1, 2, 3])
    assert fits[0] is None and fits[1] is None
    assert fits[2].k == 3 and fits[2].k_source == "grid"


# -- variances and premium ------------------------------------------------------------

def test_adapted_hill_variance():
    assert adapted_hill_variance(0.6, 0.6) == pytest.approx(0.6)
    assert adapted_hill_variance(0.5, 1.0) == pytest.approx(0.25)


def test_premium_variance_uncensored_value():
    assert premium_variance(0.5, 1.0) == pytest.approx(4.25)


def test_premium_variance_censored_value():
    # 0.25/(0.5*0.0625) + (0.5*0.25/0.5)**2 + 0.5*0.5*(0.5/0.5)**2
    assert premium_variance(0.5, 0.5) == pytest.approx(8.0 + 0.0625 + 0.25)


def test_premium_variance_vanishes_with_gamma():
    assert premium_variance(1e-6, 0.5) < 1e-10
    assert premium_variance(0.0, 0.5) == 0.0


def test_premium_variance_infinite_mean():
    with pytest.raises(EstimationError):
        premium_variance(1.0, 0.5)


def _premium_sample():
    # n = 20, k = 10: threshold Z_{10:20} = 10 and KM survival at it equal to 1/2.
    z = np.arange(1.0, 21.0)
    return make(z, np.ones(20))


def test_premium_estimate_assembly():
    s = _premium_sample()
    fit = premium_estimate(s, 10)
    assert fit.threshold == 10.0
    assert fit.km_survival_at_threshold == 0.5
    assert fit.premium == fit.gamma1_hat / (1 - fit.gamma1_hat) * fit.threshold * fit.km_survival_at_threshold


def test_premium_arithmetic_example():
    g, thr, km = 0.5, 10.0, 0.1
    assert g / (1 - g) * thr * km == pytest.approx(1.0)


def test_premium_estimate_rejects_infinite_mean():
    with pytest.raises(EstimationError, match="infinite-mean"):
        premium_estimate(FIXTURE, 2)


def test_premium_se_plug_in():
    s = _premium_sample()
    fit = asymptotic_ci(s, 10)
    se = premium_se(fit, s, 10)
    expected = math.sqrt(premium_variance(fit.gamma1_hat, fit.p_hat)) * 10.0 * 0.5 / math.sqrt(10)
    assert se == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        premium_se(fit, s, 9)


@settings(max_examples=100, deadline=None)
@given(censored_samples(min_size=5))
def test_premium_components_multiply_back(s):
    k = s.n // 2
    try:
        fit = premium_estimate(s, k)
    except EstimationError:
        return
    assert fit.premium == fit.gamma1_hat / (1 - fit.gamma1_hat) * fit.threshold * fit.km_survival_at_threshold
    assert fit.premium >= 0 and fit.se_scaled >= 0
