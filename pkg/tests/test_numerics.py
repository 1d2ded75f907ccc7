import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from repinsure.errors import DomainError, EvaluationError
from repinsure.numerics import (
    DiscountSpec,
    PoissonDist,
    ceil_discount_integral,
    discounted_slot_sum,
    erlang_pdf,
    integrate_1d,
    poisson_cdf,
    poisson_cdf_array,
    poisson_pmf,
    poisson_sf,
    uniform_ceil_discount_mean,
)


def mp_pmf(k, m):
    m = mpmath.mpf(m)
    return mpmath.exp(-m + k * mpmath.log(m) - mpmath.loggamma(k + 1)) if m > 0 else mpmath.mpf(k == 0)


def mp_cdf(k, m):
    # P[X <= k] = Q(k + 1, m), the regularized upper incomplete gamma
    return mpmath.gammainc(k + 1, mpmath.mpf(m), mpmath.inf, regularized=True)


def mp_sf(k, m):
    # P[X > k] = P(k + 1, m), computed directly so tiny tails keep full precision
    return mpmath.gammainc(k + 1, 0, mpmath.mpf(m), regularized=True)


def rel_err(x, ref):
    ref = float(ref)
    return abs(x - ref) / abs(ref)


GRID_K = [0, 1, 2, 5, 29, 30, 31, 50, 99, 100, 199, 200, 500, 1000, 5000, 9999, 10000, 10100]
GRID_M = [1e-3, 0.5, 2.0, 29.9, 30.0, 30.1, 36.0, 100.0, 180.0, 500.0, 1000.0, 5000.0, 9900.0, 1e4]


# pmf


def test_pmf_examples():
    assert poisson_pmf(0, 0.0) == 1.0
    assert poisson_pmf(3, 0.0) == 0.0
    assert poisson_pmf(2, 2.0) == pytest.approx(2 * math.exp(-2.0), rel=1e-15)
    assert poisson_pmf(-1, 2.0) == 0.0


def test_pmf_negative_mean_rejected():
    with pytest.raises(DomainError):
        poisson_pmf(1, -0.1)
    with pytest.raises(DomainError):
        poisson_cdf(1, -0.1)
    with pytest.raises(DomainError):
        PoissonDist(-1.0)


@pytest.mark.parametrize("m", GRID_M)
@pytest.mark.parametrize("k", GRID_K)
def test_pmf_matches_arbitrary_precision(k, m):
    ref = mp_pmf(k, m)
    if ref < mpmath.mpf("1e-290"):
        assert poisson_pmf(k, m) < 1e-280
    else:
        assert rel_err(poisson_pmf(k, m), ref) < 1e-10


def test_pmf_continuous_across_log_space_switch():
    for m in (29.5, 30.0, 30.5):
        for k in range(25, 36):
            assert rel_err(poisson_pmf(k, m), mp_pmf(k, m)) < 1e-13


# cdf / sf


def test_cdf_examples():
    assert poisson_cdf(-1, 5.0) == 0.0
    assert poisson_cdf(199, 180.0) == pytest.approx(0.92514, abs=1e-5)
    assert poisson_cdf(5, 0.0) == 1.0
    assert 1.0 - poisson_cdf(99, 36.0) < 1e-15
    tail = mp_sf(99, 36)
    assert tail < mpmath.mpf("1e-15")
    assert poisson_sf(99, 36.0) == pytest.approx(float(tail), rel=1e-10)


@pytest.mark.parametrize("m", GRID_M)
@pytest.mark.parametrize("k", GRID_K)
def test_cdf_and_sf_match_arbitrary_precision(k, m):
    cdf_ref = mp_cdf(k, m)
    sf_ref = mp_sf(k, m)
    if cdf_ref > mpmath.mpf("1e-290"):
        assert rel_err(poisson_cdf(k, m), cdf_ref) < 1e-10
    if sf_ref > mpmath.mpf("1e-290"):
        assert rel_err(poisson_sf(k, m), sf_ref) < 1e-10


@pytest.mark.parametrize("m", [0.7, 36.0, 180.0, 1000.0, 1e4])
@pytest.mark.parametrize("k", [0, 10, 99, 199, 990, 10050])
def test_cdf_plus_tail_sum_is_one(k, m):
    # the tail is summed term by term here only to check the identity
    j = k + 1
    tail = 0.0
    while True:
        term = poisson_pmf(j, m)
        tail += term
        if j > m and term < 1e-18 * max(tail, 1e-300):
            break
        j += 1
    assert poisson_cdf(k, m) + tail == pytest.approx(1.0, abs=1e-10)


@given(k=st.integers(0, 400), m1=st.floats(0, 800), m2=st.floats(0, 800))
def test_cdf_nonincreasing_in_mean(k, m1, m2):
    lo, hi = sorted((m1, m2))
    assert poisson_cdf(k, hi) <= poisson_cdf(k, lo)


@given(k1=st.integers(-5, 500), k2=st.integers(-5, 500), m=st.floats(0, 600))
def test_cdf_monotone_in_k_and_bounded(k1, k2, m):
    lo, hi = sorted((k1, k2))
    a, b = poisson_cdf(lo, m), poisson_cdf(hi, m)
    assert 0.0 <= a <= b <= 1.0


def test_cdf_array_matches_scalar():
    means = np.array([0.0, 0.3, 30.0, 180.0, 999.5])
    got = poisson_cdf_array(99, means)
    assert got.tolist() == [poisson_cdf(99, m) for m in means]
    assert poisson_cdf_array(-1, means).tolist() == [0.0] * 5
    with pytest.raises(DomainError):
        poisson_cdf_array(3, np.array([1.0, -1.0]))


@pytest.mark.parametrize("m", [0.0, 0.4, 12.0, 180.0, 2500.0])
def test_pmf_sums_to_one_up_to_negligible_tail(m):
    dist = PoissonDist(m)
    k = 0
    while dist.sf(k) >= 1e-15:
        k += 1
    total = math.fsum(dist.pmf(j) for j in range(k + 1))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert dist.cdf(k) == pytest.approx(total, abs=1e-12)


# discount sums


def test_discounted_slot_sum_examples():
    assert discounted_slot_sum(0.99, 1, math.inf) == pytest.approx(99.0, rel=1e-13)
    direct = math.fsum(0.99**t for t in range(1, 61))
    assert discounted_slot_sum(0.99, 1, 60) == pytest.approx(direct, rel=1e-14)
    assert discounted_slot_sum(0.99, 1, 60) == pytest.approx(99 * (1 - 0.99**60), rel=1e-14)
    assert discounted_slot_sum(1.0, 3, 7) == 5
    assert discounted_slot_sum(0.9, 5, 4) == 0.0


def test_discounted_slot_sum_errors():
    with pytest.raises(DomainError):
        discounted_slot_sum(1.0, 1, math.inf)
    with pytest.raises(DomainError):
        discounted_slot_sum(0.0, 1, 3)
    with pytest.raises(DomainError):
        discounted_slot_sum(0.5, -1, 3)


@given(delta=st.floats(0.05, 1.0), a=st.integers(0, 300), n=st.integers(0, 300))
def test_discounted_slot_sum_matches_direct_sum(delta, a, n):
    direct = math.fsum(delta**t for t in range(a, a + n))
    assert discounted_slot_sum(delta, a, a + n - 1) == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_ceil_discount_integral_piecewise():
    delta, d = 0.9, 3.0
    assert ceil_discount_integral(delta, d, 6.0) == pytest.approx(3 * (delta + delta**2))
    assert ceil_discount_integral(delta, d, 4.0) == pytest.approx(3 * delta + delta**2)
    assert ceil_discount_integral(delta, d, 0.0) == 0.0


def test_uniform_ceil_discount_mean_examples():
    assert uniform_ceil_discount_mean(1.0, 3.0, 0.0, 180.0) == 1.0
    exact = 3.0 / 180.0 * math.fsum(0.99**t for t in range(1, 61))
    got = uniform_ceil_discount_mean(0.99, 3.0, 0.0, 180.0)
    assert got == pytest.approx(exact, rel=1e-14)


def test_uniform_ceil_discount_mean_errors():
    with pytest.raises(DomainError):
        uniform_ceil_discount_mean(0.9, 3.0, 5.0, 5.0)
    with pytest.raises(DomainError):
        uniform_ceil_discount_mean(0.9, 3.0, 6.0, 5.0)
    with pytest.raises(DomainError):
        uniform_ceil_discount_mean(0.9, 0.0, 0.0, 5.0)


def test_uniform_ceil_discount_mean_monte_carlo():
    rng = np.random.default_rng(11)
    t = rng.uniform(0.0, 180.0, 10**6)
    x = 0.99 ** np.ceil(t / 3.0)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - uniform_ceil_discount_mean(0.99, 3.0, 0.0, 180.0)) < 3 * se


@pytest.mark.parametrize("case", range(8))
def test_uniform_ceil_discount_mean_random_configs(case):
    rng = np.random.default_rng(100 + case)
    delta = rng.uniform(0.5, 1.0)
    d = rng.uniform(0.5, 7.0)
    t_lo = rng.uniform(0.0, 50.0)
    t_hi = t_lo + rng.uniform(0.1, 80.0)
    t = rng.uniform(t_lo, t_hi, 200_000)
    x = delta ** np.ceil(t / d)
    se = x.std(ddof=1) / math.sqrt(x.size)
    got = uniform_ceil_discount_mean(delta, d, t_lo, t_hi)
    assert abs(x.mean() - got) < 3 * se + 1e-15
    # exact oracle: adaptive quadrature split at the slot boundaries
    pts = [k * d for k in range(math.ceil(t_lo / d), math.floor(t_hi / d) + 1) if t_lo < k * d < t_hi]
    val, _ = integrate.quad(lambda s: delta ** math.ceil(s / d), t_lo, t_hi, points=pts or None, limit=500)
    assert got == pytest.approx(val / (t_hi - t_lo), rel=1e-9)


def test_discount_spec():
    spec = DiscountSpec(0.99, 3.0)
    assert spec.slot_sum(1) == pytest.approx(99.0)
    assert spec.ceil_mean(0.0, 180.0) == uniform_ceil_discount_mean(0.99, 3.0, 0.0, 180.0)
    with pytest.raises(DomainError):
        DiscountSpec(1.5, 3.0)
    with pytest.raises(DomainError):
        DiscountSpec(0.5, 0.0)


# Erlang density and quadrature


def test_erlang_examples():
    assert erlang_pdf(1, 2.0, 0.0) == 2.0
    assert erlang_pdf(2, 1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert erlang_pdf(3, 1.0, -1.0) == 0.0
    with pytest.raises(DomainError):
        erlang_pdf(0, 1.0, 1.0)
    with pytest.raises(DomainError):
        erlang_pdf(2, 0.0, 1.0)


@pytest.mark.parametrize("k,rate", [(100, 0.2), (200, 0.1), (1, 3.0), (30, 1.0)])
def test_erlang_normalization(k, rate):
    hi = (k + 20 * math.sqrt(k) + 50) / rate
    total = integrate_1d(lambda t: erlang_pdf(k, rate, t), 0.0, hi, 1e-10, period=50.0 / rate)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("k,rate,t", [(100, 0.2, 500.0), (100, 0.2, 420.0), (5, 1.5, 2.0), (200, 0.1, 2100.0)])
def test_erlang_is_derivative_of_poisson_tail(k, rate, t):
    h = 1e-4 * max(t, 1.0)
    fd = (poisson_sf(k - 1, rate * (t + h)) - poisson_sf(k - 1, rate * (t - h))) / (2 * h)
    assert fd == pytest.approx(erlang_pdf(k, rate, t), rel=1e-5)


def test_integrate_rejects_infinite_periodic_split():
    with pytest.raises(DomainError):
        integrate_1d(lambda t: math.exp(-t), 0.0, math.inf, period=1.0)
    assert integrate_1d(lambda t: math.exp(-t), 0.0, math.inf) == pytest.approx(1.0, abs=1e-10)


def test_integrate_examples():
    assert integrate_1d(lambda t: 1.0, 0.0, 3.0) == pytest.approx(3.0, abs=1e-12)
    delta = 0.97
    got = integrate_1d(lambda t: delta ** math.ceil(t / 3.0), 0.0, 6.0, period=3.0)
    assert got == pytest.approx(3 * (delta + delta**2), abs=1e-12)
    got = integrate_1d(lambda t: 1.0 if t < 2.5 else 4.0, 0.0, 4.0, breakpoints=(2.5,))
    assert got == pytest.approx(2.5 + 6.0, abs=1e-12)


def test_integrate_errors():
    with pytest.raises(DomainError):
        integrate_1d(lambda t: t, 1.0, 1.0)
    with pytest.raises(EvaluationError):
        integrate_1d(lambda t: math.inf, 0.0, 1.0)
    with pytest.raises(EvaluationError):
        integrate_1d(lambda t: math.nan if t > 0.5 else 0.0, 0.0, 1.0)
