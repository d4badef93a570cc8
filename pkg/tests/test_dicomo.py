import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimred.dicomo import (
    MomentSpec,
    capi,
    capi_terms,
    comoment,
    continuum,
    dcor,
    dcov,
    dcov_sq,
    dvar,
    mdcorr,
    mdd,
    moment,
    standardized_comoment,
)
from dimred.errors import DataError

from oracles import dcor_loops, dcov_sq_loops, mdd_sq_loops, trimmed_moment_sorted


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def test_variance_of_one_two_three():
    assert moment([1, 2, 3]) == pytest.approx(2 / 3)


def test_symmetric_sample_has_zero_skewness():
    assert moment([-3, -1, 0, 1, 3], MomentSpec("skew")) == pytest.approx(0.0, abs=1e-15)


def test_kurtosis_of_plus_minus_one():
    assert moment([-1, 1, -1, 1], MomentSpec("kurt")) == pytest.approx(1.0)


@pytest.mark.parametrize("order,kind", [(2, "var")])
@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.2, 0.34])
@pytest.mark.parametrize("center", ["mean", "median"])
def test_trimmed_variance_matches_sort_and_trim(order, kind, alpha, center):
    x = np.random.default_rng(0).standard_t(2, size=37)
    got = moment(x, MomentSpec(kind, center, alpha))
    assert got == pytest.approx(trimmed_moment_sorted(x, order, alpha, center), rel=1e-12)


def test_trimmed_kurtosis_uses_trimmed_scale():
    x = np.random.default_rng(1).standard_t(3, size=50)
    m2 = trimmed_moment_sorted(x, 2, 0.1)
    m4 = trimmed_moment_sorted(x, 4, 0.1)
    assert moment(x, MomentSpec("kurt", trim_alpha=0.1)) == pytest.approx(m4 / m2**2, rel=1e-12)


def test_too_few_after_trimming():
    with pytest.raises(DataError):
        moment([1.0, 2.0, 3.0], MomentSpec("var", trim_alpha=0.4))


def _trimmed_comoment_oracle(x, y, alpha, a, b):
    cx = np.asarray(x) - np.mean(x)
    cy = np.asarray(y) - np.mean(y)
    k = int(np.floor(alpha * len(cx)))
    ranked = sorted(range(len(cx)), key=lambda i: (-abs(cx[i] * cy[i]), i))
    kept = sorted(ranked[k:])
    return sum(cx[i] ** a * cy[i] ** b for i in kept) / len(kept)


def test_self_covariance_is_variance():
    x = np.random.default_rng(2).normal(size=20)
    assert comoment(x, x) == pytest.approx(moment(x))


def test_correlation_of_increasing_linear_map():
    x = np.random.default_rng(3).normal(size=20)
    assert comoment(x, 3 * x + 2, MomentSpec("corr")) == pytest.approx(1.0)


def test_trimmed_covariance_small_case():
    got = comoment([1, 2, 3], [1, 2, 3], MomentSpec("cov", trim_alpha=0.34))
    assert got == pytest.approx(_trimmed_comoment_oracle([1, 2, 3], [1, 2, 3], 0.34, 1, 1))
    assert got == pytest.approx(0.5)


@pytest.mark.parametrize("kind,option,a,b", [
    ("cov", 1, 1, 1), ("coskew", 1, 2, 1), ("coskew", 2, 1, 2),
    ("cokurt", 1, 3, 1), ("cokurt", 2, 2, 2), ("cokurt", 3, 1, 3),
])
@pytest.mark.parametrize("alpha", [0.0, 0.05, 0.25])
def test_trimmed_comoments_match_brute_force(kind, option, a, b, alpha):
    rng = np.random.default_rng(4)
    x, y = rng.standard_t(3, size=41), rng.standard_t(3, size=41)
    got = comoment(x, y, MomentSpec(kind, trim_alpha=alpha, option=option))
    assert got == pytest.approx(_trimmed_comoment_oracle(x, y, alpha, a, b), rel=1e-12, abs=1e-15)


def test_comoment_length_mismatch():
    with pytest.raises(DataError):
        comoment([1, 2, 3], [1, 2])


def test_standardized_coskew_definition():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=30), rng.exponential(size=30)
    cx, cy = x - x.mean(), y - y.mean()
    want = np.mean(cx**2 * cy) / (np.std(x) ** 2 * np.std(y))
    assert standardized_comoment(x, y, "coskew", 1) == pytest.approx(want)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 100_000), st.integers(3, 40))
def test_correlation_bounded(seed, n):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=n), rng.normal(size=n) + rng.uniform(-2, 2) * 0
    r = comoment(x, y + seed % 3 * x, MomentSpec("corr"))
    assert -1 - 1e-10 <= r <= 1 + 1e-10


def test_moments_are_permutation_invariant():
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=25), rng.normal(size=25)
    perm = rng.permutation(25)
    for kind in ("var", "skew", "kurt"):
        assert moment(x[perm], MomentSpec(kind, trim_alpha=0.1)) == pytest.approx(moment(x, MomentSpec(kind, trim_alpha=0.1)))
    assert comoment(x[perm], y[perm], MomentSpec("cokurt", trim_alpha=0.1, option=2)) == pytest.approx(
        comoment(x, y, MomentSpec("cokurt", trim_alpha=0.1, option=2)))


# ---------------------------------------------------------------------------
# continuum and capi
# ---------------------------------------------------------------------------

def test_continuum_alpha_one_is_squared_covariance():
    rng = np.random.default_rng(7)
    t, y = rng.normal(size=30), rng.normal(size=30)
    assert continuum(t, y, 1.0) == comoment(t, y) ** 2


def test_continuum_constant_response():
    assert continuum([1.0, 2.0, 4.0], [5.0, 5.0, 5.0], 3.0) == 0.0


def test_continuum_alpha_two_hand_value():
    assert continuum([-1, 0, 1], [-1, 0, 1], 2.0) == pytest.approx(8 / 27)


def test_capi_first_weight_selects_squared_correlation():
    rng = np.random.default_rng(8)
    t, y = rng.normal(size=40), rng.normal(size=40)
    r = comoment(t, y, MomentSpec("corr"))
    assert capi(t, y, (1, 0, 0, 0, 0, 0)) == pytest.approx(r**2)


def test_capi_zero_weights():
    assert capi([1, 2, 3.5], [2, 1, 0], np.zeros(6)) == 0.0


def test_capi_near_zero_for_independent_gaussians():
    rng = np.random.default_rng(9)
    t, y = rng.normal(size=2000), rng.normal(size=2000)
    assert abs(capi(t, y, (1, 1, 1, 0, 0, 0))) < 0.1


def test_capi_wrong_weight_length():
    with pytest.raises(DataError):
        capi([1, 2, 3], [3, 1, 2], (1, 1, 1))


def test_capi_terms_cokurt_two_two_near_one_for_independent_gaussians():
    rng = np.random.default_rng(10)
    terms = capi_terms(rng.normal(size=5000), rng.normal(size=5000))
    assert terms[4] == pytest.approx(1.0, abs=0.1)


# ---------------------------------------------------------------------------
# energy statistics
# ---------------------------------------------------------------------------

def test_dcov_with_constant_is_zero():
    x = np.random.default_rng(11).normal(size=10)
    assert dcov(x, np.ones(10)) == 0.0


def test_dcor_of_variable_with_itself():
    x = np.random.default_rng(12).normal(size=10)
    assert dcor(x, x) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(20))
def test_energy_statistics_match_double_sums(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    px, py = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    X, Y = rng.normal(size=(n, px)), rng.normal(size=(n, py))
    y = rng.normal(size=n)
    assert dcov_sq(X, Y) == pytest.approx(dcov_sq_loops(X, Y), abs=1e-12)
    assert dcor(X, Y) == pytest.approx(dcor_loops(X, Y), abs=1e-12)
    assert mdd(y, X) == pytest.approx(mdd_sq_loops(y, X), abs=1e-12)


def test_mdd_constant_response_and_constant_predictors():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(8, 2))
    assert mdd(np.full(8, 2.0), X) == pytest.approx(0.0, abs=1e-15)
    y = rng.normal(size=8)
    assert mdd(y - y.mean(), np.tile(X[0], (8, 1))) == pytest.approx(0.0, abs=1e-15)


def test_mdd_nonnegative_and_mdcorr_bounded():
    rng = np.random.default_rng(14)
    for _ in range(20):
        X = rng.normal(size=(15, 2))
        y = X[:, 0] ** 2 + rng.normal(size=15)
        assert mdd(y, X) >= -1e-12
        assert 0 <= mdcorr(y, X) <= 1 + 1e-12


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dcor_bounded_and_dcov_symmetric(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    X = rng.normal(size=(n, int(rng.integers(1, 3))))
    Y = rng.normal(size=(n, int(rng.integers(1, 3))))
    if seed % 4 == 0:
        Y = X @ rng.normal(size=(X.shape[1], Y.shape[1]))
    r = dcor(X, Y)
    assert -1e-10 <= r <= 1 + 1e-10
    assert dcov(X, Y) == pytest.approx(dcov(Y, X), rel=1e-12, abs=1e-15)


def test_dcov_distance_homogeneity():
    rng = np.random.default_rng(15)
    X, Y = rng.normal(size=(12, 2)), rng.normal(size=12)
    for a in (-3.0, 0.5, 7.0):
        assert dcov_sq(a * X, Y) == pytest.approx(abs(a) * dcov_sq(X, Y), rel=1e-12)


def test_dvar_is_self_dcov():
    x = np.random.default_rng(16).normal(size=9)
    assert dvar(x) == pytest.approx(dcov(x, x))


def test_energy_row_mismatch():
    with pytest.raises(DataError):
        dcov(np.ones(4), np.ones(5))
    with pytest.raises(DataError):
        mdd(np.ones(4), np.ones((5, 2)))
