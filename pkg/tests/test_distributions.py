import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from steinchain.distributions import ParameterError, make_custom_pmf, make_pmf, truncate


def test_uniform_masses():
    assert np.allclose(make_pmf("uniform", n=4).masses(), [0.25] * 4, rtol=0, atol=1e-15)


def test_binomial_small():
    assert np.allclose(make_pmf("binomial", n=2, p=0.5).masses(), [0.25, 0.5, 0.25], rtol=0, atol=1e-15)


def test_hypergeometric_small():
    m = make_pmf("hypergeometric", n=4, r=2).masses()
    assert np.allclose(m, [1 / 6, 4 / 6, 1 / 6], rtol=0, atol=1e-15)


@pytest.mark.parametrize("n,r", [(20, 8), (30, 15), (100, 7)])
def test_hypergeometric_matches_scipy(n, r):
    # population n, r marked, r draws
    ref = stats.hypergeom(n, r, r).pmf(np.arange(r + 1))
    assert np.allclose(make_pmf("hypergeometric", n=n, r=r).masses(), ref, rtol=1e-12, atol=0)


@pytest.mark.parametrize("n,p", [(10, 0.3), (1000, 0.5), (10_000, 0.01)])
def test_binomial_matches_scipy_large_n(n, p):
    m = make_pmf("binomial", n=n, p=p).masses()
    ref = stats.binom(n, p).pmf(np.arange(n + 1))
    big = ref > 1e-250
    assert np.all(np.isfinite(m))
    assert np.allclose(m[big], ref[big], rtol=1e-9, atol=0)
    assert abs(math.fsum(m) - 1) < 1e-12


def test_negative_binomial_matches_scipy():
    pmf = make_pmf("negative_binomial", r=2, p=0.4)
    # our p is the birth probability, so scipy's success probability is 1 - p
    ref = stats.nbinom(2, 0.6)
    k = np.arange(60)
    assert np.allclose(pmf.masses(59), ref.pmf(k), rtol=1e-12)
    assert np.allclose(pmf.tail(k), ref.sf(k), rtol=1e-10)
    assert np.allclose(pmf.cdf(k), ref.cdf(k), rtol=1e-12)


def test_geometric_recurrence():
    p = 0.3
    m = make_pmf("geometric", p=p).masses(200)
    assert np.allclose(m[1:] / m[:-1], 1 - p, rtol=1e-14, atol=0)


@pytest.mark.parametrize("family,params", [
    ("binomial", dict(n=40, p=0.7)), ("hypergeometric", dict(n=50, r=20)), ("uniform", dict(n=9)),
])
def test_cdf_tail_consistency_finite(family, params):
    pmf = make_pmf(family, **params)
    k = np.arange(int(pmf.support_upper) + 1)
    m = pmf.masses()
    assert abs(math.fsum(m) - 1) < 1e-12
    assert np.all(np.diff(pmf.cdf(k)) >= 0)
    assert np.allclose(pmf.cdf(k) + pmf.tail(k), 1.0, rtol=0, atol=1e-14)
    direct = np.array([math.fsum(m[j + 1:]) for j in k])
    assert np.allclose(pmf.tail(k), direct, rtol=0, atol=1e-14)


@pytest.mark.parametrize("pmf", [make_pmf("geometric", p=0.35), make_pmf("negative_binomial", r=3.5, p=0.6)])
def test_cdf_tail_consistency_infinite(pmf):
    k = np.arange(80)
    assert np.allclose(pmf.cdf(k) + pmf.tail(k), 1.0, rtol=0, atol=1e-14)


def test_mass_outside_support_is_zero():
    pmf = make_pmf("binomial", n=5, p=0.5)
    assert pmf.mass(-1) == 0.0 and pmf.mass(6) == 0.0


@pytest.mark.parametrize("family,params,name", [
    ("binomial", dict(n=5, p=0.0), "p"), ("binomial", dict(n=5, p=1.0), "p"),
    ("geometric", dict(p=1.5), "p"), ("hypergeometric", dict(n=5, r=3), "r"),
    ("hypergeometric", dict(n=5, r=0), "r"), ("negative_binomial", dict(r=0, p=0.5), "r"),
    ("uniform", dict(n=0), "n"),
])
def test_domain_errors_name_parameter(family, params, name):
    with pytest.raises(ParameterError) as info:
        make_pmf(family, **params)
    assert info.value.name == name


def test_custom_pmf():
    assert np.allclose(make_custom_pmf([1, 1, 2]).masses(), [0.25, 0.25, 0.5])
    point = make_custom_pmf([1])
    assert point.support_upper == 0 and point.mass(0) == 1.0
    with pytest.raises(ParameterError):
        make_custom_pmf([1, 0, 1])
    with pytest.raises(ParameterError):
        make_custom_pmf([0, 0])
    with pytest.raises(ParameterError):
        make_custom_pmf([1, -1])


def test_truncate_geometric_half():
    t = truncate(make_pmf("geometric", p=0.5), 1e-12)
    assert t.window_upper == 39
    assert t.tail_mass == 0.5 ** 40


def test_truncate_finite_is_noop():
    t = truncate(make_pmf("binomial", n=10, p=0.3), 1e-3)
    assert t.window_upper == 10 and t.tail_mass == 0.0


def test_truncate_negative_binomial_direct_sum():
    pmf = make_pmf("negative_binomial", r=2, p=0.4)
    t = truncate(pmf, 1e-12)
    m = pmf.masses(t.window_upper)
    # tail by direct summation of the series beyond the window
    far = pmf.masses(t.window_upper + 400)[t.window_upper + 1:]
    assert math.fsum(far) <= 1e-12
    prev = pmf.masses(t.window_upper + 400)[t.window_upper:]
    assert math.fsum(prev) > 1e-12
    assert abs(math.fsum(m) + t.tail_mass - 1) < 1e-12


def test_truncate_renormalized():
    t = truncate(make_pmf("geometric", p=0.1), 1e-6, renormalize=True)
    assert abs(math.fsum(t.masses()) - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(1e-14, 1e-3))
def test_truncate_is_minimal(p, tol):
    pmf = make_pmf("geometric", p=p)
    t = truncate(pmf, tol)
    assert pmf.tail(t.window_upper) <= tol
    assert t.window_upper == 0 or pmf.tail(t.window_upper - 1) > tol


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=30))
def test_custom_normalization_property(w):
    m = make_custom_pmf(w).masses()
    assert abs(math.fsum(m) - 1) < 1e-12
    assert np.allclose(m, np.array(w) / math.fsum(w), rtol=1e-12)
