"""Marketplace rules: profit, feedback ratings, reputation profiles and rates."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Literal, Union

from .errors import DomainError

Label = Literal["average", "reputable", "insured"]


@dataclass(frozen=True)
class TabulatedAdoption:
    """Purchase probabilities given directly per seller label."""

    P_ba: float = 0.03
    P_br: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.P_ba <= self.P_br <= 1.0:
            raise DomainError(f"need 0 <= P_ba <= P_br <= 1, got ({self.P_ba}, {self.P_br})")


@dataclass(frozen=True)
class FunctionalAdoption:
    """Purchase probability ``min(1, scale * Q_e * (1 - p)**price_exponent)``.

    Nondecreasing in the estimated quality and nonincreasing in the price.
    Only the simulator consumes this form; the analytic evaluators need the
    tabulated constants (see :meth:`MarketParams.tabulated`).
    """

    scale: float = 1.0
    price_exponent: float = 1.0

    def __post_init__(self):
        if self.scale < 0.0 or self.price_exponent < 0.0:
            raise DomainError("scale and price_exponent must be nonnegative")

    def __call__(self, Q_e: float, p: float) -> float:
        return min(1.0, max(0.0, self.scale * Q_e * (1.0 - p) ** self.price_exponent))


AdoptionModel = Union[TabulatedAdoption, FunctionalAdoption]


def _check_unit(name: str, value: float, lo_open: bool = False) -> None:
    ok = (0.0 < value <= 1.0) if lo_open else (0.0 <= value <= 1.0)
    if not ok:
        bound = "(0, 1]" if lo_open else "[0, 1]"
        raise DomainError(f"{name} must lie in {bound}, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    """Static parameters of a single-product marketplace.

    Rates are per day and times are in days. ``u`` and ``fee`` optionally
    override the derived unit profit ``(1 - alpha) p - c`` and transaction
    fee ``alpha p``; the published gain tables fix ``u = 1`` and a fee of
    0.1, which no price in ``[0, 1]`` can produce.
    """

    p: float = 1.0
    c: float = 0.0
    alpha: float = 0.1
    Q_a: float = 0.8
    Q_i: float = 0.8
    gamma: float = 0.1
    beta: float = 0.5
    theta: float = 0.9
    r_h: int = 100
    lambda1: float = 20.0
    lambda2: float = 50.0
    d: float = 3.0
    T_w: float = 180.0
    delta: float = 0.99
    C_S: float = 0.5
    adoption: AdoptionModel = field(default_factory=TabulatedAdoption)
    u: float | None = None
    fee: float | None = None

    def __post_init__(self):
        for name in ("p", "c", "Q_a", "Q_i", "gamma", "beta"):
            _check_unit(name, getattr(self, name))
        _check_unit("theta", self.theta, lo_open=True)
        _check_unit("delta", self.delta, lo_open=True)
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.Q_a < self.Q_i:
            raise DomainError("advertised quality cannot be below intrinsic quality")
        if int(self.r_h) != self.r_h or self.r_h < 1:
            raise DomainError(f"r_h must be a positive integer, got {self.r_h!r}")
        if not 0.0 < self.lambda1 < self.lambda2:
            raise DomainError("need 0 < lambda1 < lambda2")
        if not self.d > 0.0 or not self.T_w > 0.0:
            raise DomainError("slot length d and patience T_w must be positive")
        if abs(self.T_w / self.d - round(self.T_w / self.d)) > 1e-9:
            raise DomainError(f"T_w / d must be an integer, got {self.T_w}/{self.d}")
        if self.C_S < 0.0:
            raise DomainError("shipment cost must be nonnegative")
        if not isinstance(self.adoption, (TabulatedAdoption, FunctionalAdoption)):
            raise DomainError(f"unsupported adoption model {self.adoption!r}")
        if unit_profit(self) < 0.0:
            warnings.warn(f"negative unit profit {unit_profit(self)!r}", RuntimeWarning, stacklevel=3)

    @property
    def patience_slots(self) -> int:
        return int(round(self.T_w / self.d))

    @property
    def P_ba(self) -> float:
        return purchase_probabilities(self)[0]

    @property
    def P_br(self) -> float:
        return purchase_probabilities(self)[1]

    @property
    def rate_average(self) -> float:
        return transaction_rate(self, "average")

    @property
    def rate_reputable(self) -> float:
        return transaction_rate(self, "reputable")

    def tabulated(self) -> MarketParams:
        """Copy with the adoption model collapsed to its honest-seller constants."""
        if isinstance(self.adoption, TabulatedAdoption):
            return self
        P_ba, P_br = purchase_probabilities(self)
        return replace(self, adoption=TabulatedAdoption(P_ba, P_br))

    def with_values(self, **changes) -> MarketParams:
        """Copy with fields replaced; ``P_ba``/``P_br`` address the adoption table."""
        adoption_keys = {k: changes.pop(k) for k in ("P_ba", "P_br") if k in changes}
        if adoption_keys:
            if not isinstance(self.adoption, TabulatedAdoption):
                raise DomainError("P_ba/P_br need a tabulated adoption model")
            changes["adoption"] = replace(self.adoption, **adoption_keys)
        return replace(self, **changes)


@dataclass(frozen=True)
class ReputationProfile:
    """Public reputation profile (score, #positive, #neutral, #negative)."""

    r: int = 0
    n_plus: int = 0
    n_zero: int = 0
    n_minus: int = 0

    def __post_init__(self):
        if min(self.n_plus, self.n_zero, self.n_minus) < 0:
            raise DomainError("feedback counters must be nonnegative")
        if self.r != self.n_plus - self.n_minus:
            raise DomainError("score must equal positives minus negatives")

    @property
    def total(self) -> int:
        return self.n_plus + self.n_zero + self.n_minus

    @property
    def positive_fraction(self) -> float:
        # an empty history counts as 0 so that new sellers start as average
        return self.n_plus / self.total if self.total else 0.0

    @property
    def is_empty(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class SlotFeedback:
    """Feedback counts produced by one slot's transactions."""

    N_plus: int = 0
    N_zero: int = 0
    N_minus: int = 0

    def __post_init__(self):
        if min(self.N_plus, self.N_zero, self.N_minus) < 0:
            raise DomainError("feedback counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.N_plus + self.N_zero + self.N_minus


def unit_profit(params: MarketParams) -> float:
    """Seller profit per sale, ``(1 - alpha) p - c`` unless overridden."""
    if params.u is not None:
        return float(params.u)
    return (1.0 - params.alpha) * params.p - params.c


def transaction_fee(params: MarketParams) -> float:
    """Operator fee per completed sale, ``alpha p`` unless overridden."""
    if params.fee is not None:
        return float(params.fee)
    return params.alpha * params.p


def feedback_rating(Q_p: float, Q_a: float, gamma: float) -> int:
    """Buyer rating: +1 if satisfied, 0 within the tolerance band, else -1."""
    if Q_p >= Q_a:
        return 1
    if Q_p >= Q_a - gamma:
        return 0
    return -1


def update_profile(profile: ReputationProfile, fb: SlotFeedback) -> ReputationProfile:
    return ReputationProfile(
        r=profile.r + fb.N_plus - fb.N_minus,
        n_plus=profile.n_plus + fb.N_plus,
        n_zero=profile.n_zero + fb.N_zero,
        n_minus=profile.n_minus + fb.N_minus,
    )


def is_reputable(profile: ReputationProfile, r_h: int, theta: float) -> bool:
    return profile.r >= r_h and profile.positive_fraction >= theta


def estimated_quality(Q_a: float, beta: float, reputable: bool) -> float:
    return Q_a if reputable else beta * Q_a


def purchase_probabilities(params: MarketParams) -> tuple[float, float]:
    """(P_ba, P_br) for an honestly advertising seller."""
    model = params.adoption
    if isinstance(model, TabulatedAdoption):
        return model.P_ba, model.P_br
    Q = params.Q_i
    return (
        model(estimated_quality(Q, params.beta, False), params.p),
        model(estimated_quality(Q, params.beta, True), params.p),
    )


def transaction_rate(params: MarketParams, label: Label) -> float:
    """Expected completed sales per day for a seller with the given label.

    Insured sellers attract the same rate as reputable ones.
    """
    P_ba, P_br = purchase_probabilities(params)
    if label == "average":
        return params.lambda1 * P_ba
    if label in ("reputable", "insured"):
        return params.lambda2 * P_br
    raise DomainError(f"unknown label {label!r}")


def require_tabulated(params: MarketParams) -> None:
    if not isinstance(params.adoption, TabulatedAdoption):
        raise DomainError(
            "analytic evaluators need a tabulated adoption model; use params.tabulated()"
        )


__all__ = [
    "AdoptionModel",
    "FunctionalAdoption",
    "Label",
    "MarketParams",
    "ReputationProfile",
    "SlotFeedback",
    "TabulatedAdoption",
    "estimated_quality",
    "feedback_rating",
    "is_reputable",
    "purchase_probabilities",
    "transaction_fee",
    "transaction_rate",
    "unit_profit",
    "update_profile",
]
