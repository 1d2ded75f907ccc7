import dataclasses
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repinsure.errors import DomainError
from repinsure.market import (
    FunctionalAdoption,
    MarketParams,
    ReputationProfile,
    SlotFeedback,
    TabulatedAdoption,
    estimated_quality,
    feedback_rating,
    is_reputable,
    purchase_probabilities,
    require_tabulated,
    transaction_fee,
    transaction_rate,
    unit_profit,
    update_profile,
)

unit = st.floats(0.0, 1.0)


def test_unit_profit_examples():
    assert unit_profit(MarketParams(p=1.0, c=0.0, alpha=1e-12)) == pytest.approx(1.0)
    assert unit_profit(MarketParams(p=0.5, c=0.2, alpha=0.1)) == pytest.approx(0.25)
    assert unit_profit(MarketParams(u=1.0, fee=0.1)) == 1.0
    assert transaction_fee(MarketParams(u=1.0, fee=0.1)) == 0.1
    assert transaction_fee(MarketParams(p=0.5, alpha=0.2)) == pytest.approx(0.1)


def test_negative_unit_profit_warns_not_rejects():
    with pytest.warns(RuntimeWarning):
        params = MarketParams(p=0.2, c=0.5)
    assert unit_profit(params) < 0


@pytest.mark.parametrize(
    "changes",
    [
        dict(Q_a=0.5, Q_i=0.8),
        dict(lambda1=60.0),
        dict(lambda1=0.0),
        dict(T_w=100.0),
        dict(r_h=0),
        dict(r_h=2.5),
        dict(theta=0.0),
        dict(delta=0.0),
        dict(delta=1.2),
        dict(alpha=1.0),
        dict(p=1.5),
        dict(d=0.0),
        dict(C_S=-1.0),
    ],
)
def test_invalid_params_rejected(changes):
    with pytest.raises(DomainError):
        MarketParams(**changes)


def test_adoption_validation():
    with pytest.raises(DomainError):
        TabulatedAdoption(P_ba=0.2, P_br=0.1)
    with pytest.raises(DomainError):
        TabulatedAdoption(P_ba=-0.1, P_br=0.1)
    with pytest.raises(DomainError):
        FunctionalAdoption(scale=-1.0)


def test_feedback_rating_examples():
    assert feedback_rating(0.8, 0.8, 0.1) == 1
    assert feedback_rating(0.75, 0.8, 0.1) == 0
    assert feedback_rating(0.6, 0.8, 0.1) == -1


@given(Q_p=unit, Q_a=unit, gamma=unit)
def test_feedback_rating_partitions(Q_p, Q_a, gamma):
    r = feedback_rating(Q_p, Q_a, gamma)
    branches = [Q_p >= Q_a, Q_a - gamma <= Q_p < Q_a, Q_p < Q_a - gamma]
    assert sum(branches) == 1
    assert r == (1, 0, -1)[branches.index(True)]


@given(Q=unit, gamma=unit)
def test_honest_seller_always_positive(Q, gamma):
    assert feedback_rating(Q, Q, gamma) == 1


def test_update_profile_examples():
    empty = ReputationProfile()
    assert update_profile(empty, SlotFeedback()) == empty
    assert update_profile(empty, SlotFeedback(3, 1, 1)) == ReputationProfile(2, 3, 1, 1)
    assert update_profile(ReputationProfile(5, 7, 1, 2), SlotFeedback(0, 0, 4)) == ReputationProfile(1, 7, 1, 6)


def test_profile_validation():
    with pytest.raises(DomainError):
        ReputationProfile(r=1, n_plus=0)
    with pytest.raises(DomainError):
        ReputationProfile(r=1, n_plus=-1, n_minus=-2)
    with pytest.raises(DomainError):
        SlotFeedback(N_minus=-1)


@given(st.lists(st.tuples(*[st.integers(0, 50)] * 3), max_size=30))
def test_update_profile_preserves_invariants(seq):
    prof = ReputationProfile()
    for fb in seq:
        new = update_profile(prof, SlotFeedback(*fb))
        assert new.r == new.n_plus - new.n_minus
        assert new.n_plus >= prof.n_plus and new.n_zero >= prof.n_zero and new.n_minus >= prof.n_minus
        prof = new
    assert prof.total == sum(sum(fb) for fb in seq)


def test_is_reputable_examples():
    assert not is_reputable(ReputationProfile(), 100, 0.9)
    assert is_reputable(ReputationProfile(100, 100, 0, 0), 100, 0.9)
    assert not is_reputable(ReputationProfile(100, 110, 20, 10), 100, 0.9)
    assert ReputationProfile().positive_fraction == 0.0


@given(n=st.integers(0, 400), extra=st.integers(0, 50), r_h=st.integers(1, 300), theta=st.floats(0.01, 1.0))
def test_all_positive_histories_monotone(n, extra, r_h, theta):
    a = is_reputable(ReputationProfile(n, n, 0, 0), r_h, theta)
    b = is_reputable(ReputationProfile(n + extra, n + extra, 0, 0), r_h, theta)
    assert b or not a


def test_estimated_quality_examples():
    assert estimated_quality(0.8, 0.5, True) == 0.8
    assert estimated_quality(0.8, 0.5, False) == pytest.approx(0.4)
    assert estimated_quality(0.0, 0.3, False) == 0.0


def test_transaction_rate_examples():
    params = MarketParams(lambda1=20.0, lambda2=50.0).with_values(P_ba=0.03, P_br=0.1)
    assert transaction_rate(params, "average") == pytest.approx(0.6)
    assert transaction_rate(params, "reputable") == pytest.approx(5.0)
    assert transaction_rate(params, "insured") == pytest.approx(5.0)
    assert params.rate_average == pytest.approx(0.6)
    with pytest.raises(DomainError):
        transaction_rate(params, "gold")


@given(P_ba=st.floats(0.0, 0.5), gap=st.floats(1e-3, 0.5), lam=st.floats(0.1, 40.0))
def test_average_rate_below_reputable(P_ba, gap, lam):
    params = MarketParams(lambda1=lam, lambda2=lam + 10.0).with_values(P_br=P_ba + gap, P_ba=P_ba)
    assert transaction_rate(params, "average") < transaction_rate(params, "reputable")


def test_functional_adoption_monotone_on_grid():
    model = FunctionalAdoption(scale=1.3, price_exponent=2.0)
    grid = [i / 20 for i in range(21)]
    for p in grid:
        vals = [model(q, p) for q in grid]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert vals == sorted(vals)
    for q in grid:
        vals = [model(q, p) for p in grid]
        assert vals == sorted(vals, reverse=True)


def test_functional_rates_and_tabulated_collapse():
    params = MarketParams(p=0.5, adoption=FunctionalAdoption())
    P_ba, P_br = purchase_probabilities(params)
    assert P_ba == pytest.approx(0.5 * 0.8 * 0.5)
    assert P_br == pytest.approx(0.8 * 0.5)
    tab = params.tabulated()
    assert isinstance(tab.adoption, TabulatedAdoption)
    assert transaction_rate(tab, "average") == transaction_rate(params, "average")
    with pytest.raises(DomainError):
        require_tabulated(params)
    with pytest.raises(DomainError):
        params.with_values(P_ba=0.1)


def test_params_are_immutable_and_copyable():
    params = MarketParams()
    with pytest.raises(dataclasses.FrozenInstanceError):
        params.r_h = 5
    other = params.with_values(r_h=150, P_ba=0.05)
    assert other.r_h == 150 and other.P_ba == 0.05 and params.P_ba == 0.03
    assert params.patience_slots == 60
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        MarketParams()
