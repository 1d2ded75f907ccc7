import math

import numpy as np
import pytest

from oracles import ramp_up_series, slot_sum_profit
from repinsure.baseline import (
    baseline_measures,
    drop_out_probability,
    expected_ramp_up_time,
    long_term_profit,
    ramp_process,
)
from repinsure.errors import DivergenceError, DomainError
from repinsure.experiments import table_market
from repinsure.market import FunctionalAdoption, MarketParams
from repinsure.numerics import uniform_ceil_discount_mean


def table2(lam, r_h):
    return table_market("table2", lambda1=lam, r_h=r_h)


@pytest.mark.parametrize("lam", [5, 10, 15, 20, 25])
@pytest.mark.parametrize("r_h", [100, 150, 200])
def test_ramp_up_matches_high_precision_series(lam, r_h):
    params = table2(lam, r_h)
    assert expected_ramp_up_time(params) == pytest.approx(ramp_up_series(ramp_process(params)), rel=1e-11)


def test_ramp_up_published_example():
    assert expected_ramp_up_time(table2(25, 100)) == pytest.approx(201.5, abs=0.1)


def test_ramp_up_at_least_one_slot():
    params = MarketParams(r_h=1, lambda1=1e6, lambda2=2e6).with_values(P_ba=1.0, P_br=1.0)
    assert expected_ramp_up_time(params) == pytest.approx(params.d, rel=1e-12)
    assert expected_ramp_up_time(table2(25, 1)) >= params.d


def test_ramp_up_zero_rate_diverges():
    with pytest.raises(DivergenceError):
        expected_ramp_up_time(MarketParams().with_values(P_ba=0.0))


def test_ramp_up_requires_tabulated():
    with pytest.raises(DomainError):
        expected_ramp_up_time(MarketParams(adoption=FunctionalAdoption()))


def test_drop_out_examples():
    assert drop_out_probability(table_market("table3", P_ba=0.05, r_h=200)) == pytest.approx(0.92514, abs=1e-5)
    assert drop_out_probability(table_market("table3", P_ba=0.03, r_h=100)) == pytest.approx(0.20819, abs=1e-5)
    assert drop_out_probability(MarketParams().with_values(P_ba=0.0)) == 1.0


def test_profit_published_examples():
    g, se = long_term_profit(table_market("table4", r_h=100, P_ba=0.01))
    assert se == 0.0
    assert g == pytest.approx(26.941, rel=0.005)
    g, _ = long_term_profit(table_market("table4", r_h=100, P_ba=0.05))
    assert g == pytest.approx(1142.670, rel=0.005)


@pytest.mark.parametrize("r_h", [100, 150, 200])
@pytest.mark.parametrize("P_ba", [0.01, 0.02, 0.03, 0.04, 0.05])
def test_profit_matches_slot_sum_oracle(r_h, P_ba):
    params = table_market("table4", r_h=r_h, P_ba=P_ba)
    g, _ = long_term_profit(params)
    assert g == pytest.approx(slot_sum_profit(ramp_process(params)), rel=1e-9)


def _random_params(rng):
    d = float(rng.choice([1.0, 2.0, 3.0, 5.0]))
    return MarketParams(
        r_h=int(rng.integers(5, 150)),
        lambda1=float(rng.uniform(5, 40)),
        lambda2=float(rng.uniform(45, 80)),
        d=d,
        T_w=d * int(rng.integers(10, 80)),
        delta=float(rng.uniform(0.9, 0.999)),
        u=float(rng.uniform(0.2, 2.0)),
    ).with_values(P_ba=float(rng.uniform(0.005, 0.08)), P_br=float(rng.uniform(0.08, 0.2)))


@pytest.mark.parametrize("case", range(10))
def test_quadrature_agrees_with_monte_carlo(case):
    params = _random_params(np.random.default_rng(case))
    g, _ = long_term_profit(params)
    mc, se = long_term_profit(params, "monte_carlo", runs=100_000, seed=case)
    assert abs(g - mc) < 3 * se
    assert g == pytest.approx(slot_sum_profit(ramp_process(params)), rel=1e-8)


def test_monte_carlo_is_seeded():
    params = table_market("table4", r_h=100, P_ba=0.03)
    a = long_term_profit(params, "monte_carlo", runs=5000, seed=4)
    b = long_term_profit(params, "monte_carlo", runs=5000, seed=4)
    c = long_term_profit(params, "monte_carlo", runs=5000, seed=5)
    assert a == b and a != c
    with pytest.raises(DomainError):
        long_term_profit(params, "simpson")


def test_profit_undiscounted_diverges():
    params = table_market("table4", r_h=100, P_ba=0.03).with_values(delta=1.0)
    with pytest.raises(DivergenceError):
        long_term_profit(params)
    with pytest.raises(DivergenceError):
        long_term_profit(params, "monte_carlo", runs=100)


def test_profit_undiscounted_without_ramp_is_finite():
    # nobody can ramp up, so only the pre-deadline sales count
    params = MarketParams(u=1.0, delta=1.0).with_values(P_ba=0.0)
    assert long_term_profit(params)[0] == 0.0
    params = MarketParams(u=1.0, delta=1.0, r_h=10**6)
    g, _ = long_term_profit(params)
    assert g == pytest.approx(params.rate_average * params.T_w, rel=1e-9)


def test_measures_bundle_and_gain_ratio(gains_params):
    m = baseline_measures(gains_params)
    assert m.seller_gain == pytest.approx(760.511, rel=0.01)
    assert m.operator_gain == pytest.approx(76.0511, rel=0.01)
    assert m.operator_gain == 0.1 / 1.0 * m.seller_gain
    assert 0.0 <= m.drop_out_prob <= 1.0
    assert m.expected_ramp_up_days >= gains_params.d


def test_gain_linear_in_unit_profit(gains_params):
    a = baseline_measures(gains_params)
    b = baseline_measures(gains_params.with_values(u=2.0))
    assert b.seller_gain == pytest.approx(2 * a.seller_gain, rel=1e-12)
    assert b.operator_gain == pytest.approx(a.operator_gain, rel=1e-12)


@pytest.mark.parametrize("p,alpha,c", [(1.0, 0.1, 0.0), (0.6, 0.25, 0.1), (0.3, 0.05, 0.2)])
def test_gain_ratio_uses_derived_fee(p, alpha, c):
    params = MarketParams(p=p, alpha=alpha, c=c)
    m = baseline_measures(params)
    assert m.operator_gain / m.seller_gain == pytest.approx(alpha * p / ((1 - alpha) * p - c), rel=1e-14)


def test_zero_unit_profit_gain_ratio_undefined():
    with pytest.raises(DomainError):
        baseline_measures(MarketParams(p=0.5, alpha=0.2, c=0.4))


def test_order_statistic_reduction_identity():
    rng = np.random.default_rng(2)
    k, T_w, d, delta = 40, 180.0, 3.0, 0.99
    t = rng.uniform(0.0, T_w, size=(50_000, k))
    x = (delta ** np.ceil(t / d)).sum(axis=1)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - k * uniform_ceil_discount_mean(delta, d, 0.0, T_w)) < 3 * se


def test_monotonicity_small_grid():
    for T_w in (60.0, 180.0):
        for lam in (8.0, 20.0, 40.0):
            grid = [MarketParams(lambda1=lam, T_w=T_w, r_h=r).with_values(P_ba=0.025) for r in (20, 60, 100)]
            etr = [expected_ramp_up_time(p) for p in grid]
            pd = [drop_out_probability(p) for p in grid]
            assert etr == sorted(etr) and pd == sorted(pd)
