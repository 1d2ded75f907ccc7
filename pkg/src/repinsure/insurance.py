"""Insurance for new sellers: contract, certificate state machine and analytics.

A certificate moves ``ACTIVE -> {EXPIRED, REVOKED} -> CLEARED``. Leaving
``ACTIVE`` (by expiry or revocation) opens a clearing window of length
``T_c``; sales shipped while the certificate was active still settle under
the insurance rules inside that window, and the residual deposit is
returned when it closes.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .baseline import (
    BaselineMeasures,
    baseline_measures,
    operator_gain_from,
    ramp_process,
    run_profit,
)
from .errors import BoundViolationWarning, DomainError, ProtocolError
from .market import MarketParams, ReputationProfile, SlotFeedback, require_tabulated
from .numerics import poisson_cdf
from .process import DEFAULT_QUAD_TOL, DEFAULT_SURVIVAL_CUTOFF, RampProcess


class CertStatus(str, enum.Enum):
    ACTIVE = "active"
    EXPIRED = "expired"
    REVOKED = "revoked"
    CLEARED = "cleared"


@dataclass(frozen=True)
class InsurancePolicy:
    """A ``(C_I, T_d, T_c, D_I)`` insurance with revocation threshold ``D_hat``.

    ``T_d = 0`` is accepted as the degenerate no-coverage policy.
    """

    C_I: float = 100.0
    T_d: float = 100.0
    T_c: float = 3.0
    D_I: float = 100.0
    D_hat: float = 50.0

    def __post_init__(self):
        if self.C_I < 0.0:
            raise DomainError("insurance price must be nonnegative")
        if self.T_d < 0.0:
            raise DomainError("insurance duration must be nonnegative")
        if not self.T_c > 0.0:
            raise DomainError("clearing time must be positive")
        if not self.D_I > 0.0:
            raise DomainError("deposit must be positive")
        if not 0.0 <= self.D_hat < self.D_I:
            raise DomainError("need 0 <= D_hat < D_I")


@dataclass(frozen=True)
class CertificateState:
    """Runtime state of one seller's certificate.

    ``ended_at`` is the time the certificate left ``ACTIVE``; ``refunded``
    is set once the deposit has been returned at clearing.
    """

    policy: InsurancePolicy
    status: CertStatus
    remaining_deposit: float
    issued_at: float
    profile_snapshot: ReputationProfile
    ended_at: float | None = None
    revoke_reason: str | None = None
    deducted: float = 0.0
    supplemental: float = 0.0
    refunded: float | None = None

    @property
    def expires_at(self) -> float:
        return self.issued_at + self.policy.T_d

    @property
    def clears_at(self) -> float | None:
        return None if self.ended_at is None else self.ended_at + self.policy.T_c

    @property
    def is_active(self) -> bool:
        return self.status is CertStatus.ACTIVE

    @property
    def outstanding(self) -> bool:
        """True until the deposit has been settled and returned."""
        return self.status is not CertStatus.CLEARED


@dataclass(frozen=True)
class SettlementOutcome:
    seller_payout: float = 0.0
    operator_fee: float = 0.0
    buyer_refund: float = 0.0
    deposit_deduction: float = 0.0
    supplemental_payment: float = 0.0


@dataclass(frozen=True)
class SlotSettlement:
    """Aggregate of one slot's insured settlements."""

    slot: int
    time: float
    status_before: CertStatus
    status_after: CertStatus
    n_paid: int
    n_refunded: int
    seller_payout: float
    operator_fee: float
    buyer_refund: float
    deduction: float
    supplemental: float
    deposit_before: float
    deposit_after: float


@dataclass(frozen=True)
class InsuredMeasures:
    expected_ramp_up_days: float
    drop_out_prob: float
    seller_gain: float
    operator_gain: float


# certificate state machine


def issue_certificate(
    policy: InsurancePolicy, profile: ReputationProfile, now: float = 0.0
) -> CertificateState:
    """Issue a certificate; only sellers with no feedback history qualify."""
    if not profile.is_empty:
        raise ProtocolError("only new sellers (empty reputation profile) can subscribe")
    return CertificateState(
        policy=policy,
        status=CertStatus.ACTIVE,
        remaining_deposit=policy.D_I,
        issued_at=now,
        profile_snapshot=profile,
    )


def _revoke(state: CertificateState, now: float, reason: str) -> CertificateState:
    return replace(state, status=CertStatus.REVOKED, ended_at=now, revoke_reason=reason)


def settle_transaction(
    state: CertificateState, rating: int, params: MarketParams, *, now: float
) -> tuple[CertificateState, SettlementOutcome]:
    """Settle one insured sale from its buyer rating.

    Positive and neutral ratings release ``(1 - alpha) p`` to the seller
    and ``alpha p`` to the operator. A negative rating refunds ``p`` to the
    buyer and charges the return shipment ``C_S`` to the deposit; any
    shortfall is an operator supplemental payment. An active certificate
    whose deposit falls to ``D_hat`` or below is revoked.
    """
    if state.status is CertStatus.CLEARED:
        raise ProtocolError("cannot settle against a cleared certificate")
    p = params.p
    if rating >= 0:
        fee = params.alpha * p
        return state, SettlementOutcome(seller_payout=p - fee, operator_fee=fee)
    deduction = min(params.C_S, state.remaining_deposit)
    shortfall = params.C_S - deduction
    state = replace(
        state,
        remaining_deposit=state.remaining_deposit - deduction,
        deducted=state.deducted + deduction,
        supplemental=state.supplemental + shortfall,
    )
    if state.is_active and state.remaining_deposit <= state.policy.D_hat:
        state = _revoke(state, now, "deposit")
    outcome = SettlementOutcome(
        buyer_refund=p, deposit_deduction=deduction, supplemental_payment=shortfall
    )
    return state, outcome


def check_consistency(
    state: CertificateState, profile: ReputationProfile, theta: float, *, now: float
) -> CertificateState:
    """Revoke an active certificate whose positive-feedback fraction is below ``theta``."""
    state = replace(state, profile_snapshot=profile)
    if state.is_active and not profile.is_empty and profile.positive_fraction < theta:
        state = _revoke(state, now, "consistency")
    return state


def settle_slot(
    state: CertificateState,
    feedback: SlotFeedback,
    params: MarketParams,
    profile: ReputationProfile,
    *,
    slot: int,
    now: float,
) -> tuple[CertificateState, SlotSettlement]:
    """Settle a slot's batch of insured sales, then apply the consistency check.

    Equivalent to calling :func:`settle_transaction` once per sale (in any
    order, since only negative ratings touch the deposit) followed by
    :func:`check_consistency` on the updated profile.
    """
    if state.status is CertStatus.CLEARED:
        raise ProtocolError("cannot settle against a cleared certificate")
    before = state
    n_paid = feedback.N_plus + feedback.N_zero
    n_neg = feedback.N_minus
    p = params.p
    fee = params.alpha * p
    if n_neg:
        cost = params.C_S * n_neg
        deduction = min(cost, state.remaining_deposit)
        state = replace(
            state,
            remaining_deposit=state.remaining_deposit - deduction,
            deducted=state.deducted + deduction,
            supplemental=state.supplemental + (cost - deduction),
        )
        if state.is_active and state.remaining_deposit <= state.policy.D_hat:
            state = _revoke(state, now, "deposit")
    else:
        deduction = 0.0
        cost = 0.0
    state = check_consistency(state, profile, params.theta, now=now)
    record = SlotSettlement(
        slot=slot,
        time=now,
        status_before=before.status,
        status_after=state.status,
        n_paid=n_paid,
        n_refunded=n_neg,
        seller_payout=n_paid * (p - fee),
        operator_fee=n_paid * fee,
        buyer_refund=n_neg * p,
        deduction=deduction,
        supplemental=cost - deduction,
        deposit_before=before.remaining_deposit,
        deposit_after=state.remaining_deposit,
    )
    return state, record


def clear_certificate(state: CertificateState, now: float) -> CertificateState:
    """Close the clearing window and return the residual deposit.

    Raises:
        ProtocolError: the certificate is still active, already cleared, or
            its clearing window has not elapsed.
    """
    if state.status is CertStatus.CLEARED:
        raise ProtocolError("certificate already cleared")
    if state.status is CertStatus.ACTIVE or now < state.clears_at:
        raise ProtocolError(f"premature clearing at t={now!r}")
    return replace(
        state,
        status=CertStatus.CLEARED,
        refunded=state.remaining_deposit,
        remaining_deposit=0.0,
    )


def expire_and_clear(state: CertificateState, now: float) -> CertificateState:
    """Advance the certificate clock to ``now``; unchanged if nothing is due."""
    if state.is_active and now >= state.expires_at:
        state = replace(state, status=CertStatus.EXPIRED, ended_at=state.expires_at)
    if state.status in (CertStatus.EXPIRED, CertStatus.REVOKED) and now >= state.clears_at:
        state = clear_certificate(state, now)
    return state


# analytics for an honest insured seller


def insured_process(params: MarketParams, policy: InsurancePolicy) -> RampProcess:
    return ramp_process(params, T_d=policy.T_d)


def insured_slot_means(params: MarketParams, policy: InsurancePolicy, n_slots: int) -> np.ndarray:
    """Expected pre-ramp sales per slot for an insured seller.

    Full insured slots get ``lambda2 P_br d``, the slot containing ``T_d``
    mixes both rates in proportion to its insured part, and later slots
    get ``lambda1 P_ba d``.
    """
    require_tabulated(params)
    d = params.d
    hi = params.lambda2 * params.adoption.P_br
    lo = params.lambda1 * params.adoption.P_ba
    k = math.floor(policy.T_d / d)
    out = np.full(n_slots, lo * d)
    out[: min(k, n_slots)] = hi * d
    if k < n_slots:
        out[k] = hi * (policy.T_d - d * k) + lo * (d * k + d - policy.T_d)
    return out


def insured_ramp_up_time(
    params: MarketParams,
    policy: InsurancePolicy,
    survival_cutoff: float = DEFAULT_SURVIVAL_CUTOFF,
) -> float:
    return insured_process(params, policy).expected_ramp_up(survival_cutoff)


def insured_drop_out_probability(params: MarketParams, policy: InsurancePolicy) -> float:
    mean = math.fsum(insured_slot_means(params, policy, params.patience_slots))
    return poisson_cdf(params.r_h - 1, mean)


def insured_long_term_profit(
    params: MarketParams,
    policy: InsurancePolicy,
    method: str = "quadrature",
    *,
    runs: int = 100_000,
    seed: int = 0,
    tol: float = DEFAULT_QUAD_TOL,
) -> tuple[float, float]:
    """Expected discounted profit of an honest insured seller, ``(gain, stderr)``."""
    return run_profit(insured_process(params, policy), method, runs, seed, tol)


def insured_measures(params: MarketParams, policy: InsurancePolicy) -> InsuredMeasures:
    process = insured_process(params, policy)
    gain = process.profit()
    return InsuredMeasures(
        expected_ramp_up_days=process.expected_ramp_up_or_inf(),
        drop_out_prob=insured_drop_out_probability(params, policy),
        seller_gain=gain,
        operator_gain=operator_gain_from(params, gain),
    )


# sizing of price, deposit and clearing time


def max_insurance_price(
    params: MarketParams,
    policy: InsurancePolicy,
    baseline: BaselineMeasures | None = None,
    insured: InsuredMeasures | None = None,
) -> float:
    """Strict upper bound on the premium: ``G_s^I - G_s``."""
    baseline = baseline or baseline_measures(params)
    insured = insured or insured_measures(params, policy)
    return insured.seller_gain - baseline.seller_gain


def min_deposit_threshold(epsilon: float, params: MarketParams, policy: InsurancePolicy) -> float:
    """Smallest revocation threshold that covers return shipments w.p. >= 1 - epsilon.

    Returns ``C_S * max(ln(1/epsilon) - mu, e**2 * mu)`` with
    ``mu = lambda2 P_br T_d`` the expected number of insured sales.
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    require_tabulated(params)
    mu = params.lambda2 * params.adoption.P_br * policy.T_d
    return params.C_S * max(math.log(1.0 / epsilon) - mu, math.e**2 * mu)


def chernoff_tail_bound(mu: float, x: float) -> float:
    """Upper bound on P[Poisson(mu) >= x] for ``x > mu``."""
    if mu == 0.0:
        return 0.0 if x > 0 else 1.0
    return math.exp(-mu + x * (1.0 + math.log(mu) - math.log(x)))


def min_clearing_time(params: MarketParams) -> float:
    """Shortest clearing window that still settles every insured sale: one slot."""
    return params.d


def policy_warnings(
    params: MarketParams,
    policy: InsurancePolicy,
    epsilon: float = 0.01,
    max_price: float | None = None,
    emit: bool = True,
) -> list[str]:
    """Check a policy against the sizing bounds; violations are warnings only."""
    out = []
    need = min_deposit_threshold(epsilon, params, policy)
    if policy.D_hat < need:
        out.append(
            f"revocation threshold D_hat={policy.D_hat:g} is below the deposit bound "
            f"{need:.6g} for epsilon={epsilon:g}"
        )
    if policy.T_c < min_clearing_time(params):
        out.append(f"clearing time T_c={policy.T_c:g} is shorter than the slot length d={params.d:g}")
    if max_price is not None and policy.C_I >= max_price:
        out.append(f"price C_I={policy.C_I:g} is not below the incentive bound {max_price:.6g}")
    if emit:
        for msg in out:
            warnings.warn(msg, BoundViolationWarning, stacklevel=2)
    return out
