"""Slot-based Monte Carlo simulation of seller lifetimes.

Each run owns two kinds of random streams, both derived from
``(seed, run_index)`` with :class:`numpy.random.SeedSequence` spawn keys:

* ``(run_index, 0)``: transaction counts, one draw sequence per slot;
* ``(run_index, 1, slot)``: arrival times inside ``slot``; only used to
  split a slot whose rate changes mid-slot, or to materialize
  :attr:`SellerTrajectory.transaction_times` on demand.

Honest sellers with a tabulated adoption model take a vectorized path that
draws the same count sequence as the general slot engine, so both produce
identical trajectories for the same seed.

A sale in slot ``l`` is paid (and rated) in slot ``l + 1`` and is discounted
by ``delta**(l + 1)``. Once a seller ramps up at slot ``s`` the reputable
phase is, by default, replaced by its expectation
``rate_reputable * d * delta**(s + 1) / (1 - delta)``.
"""

from __future__ import annotations

import functools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import AuditFailure, DivergenceError, DomainError, HorizonError
from .insurance import (
    CertificateState,
    CertStatus,
    InsurancePolicy,
    SlotSettlement,
    clear_certificate,
    expire_and_clear,
    issue_certificate,
    settle_slot,
)
from .market import (
    FunctionalAdoption,
    MarketParams,
    ReputationProfile,
    SlotFeedback,
    TabulatedAdoption,
    estimated_quality,
    feedback_rating,
    is_reputable,
    transaction_fee,
    unit_profit,
    update_profile,
)
from .numerics import poisson_cdf_array

Regime = Literal["baseline", "insured", "insured_adversarial"]
REGIMES = ("baseline", "insured", "insured_adversarial")
HORIZON_SURVIVAL = 1e-12
_MAX_AUTO_HORIZON = 2_000_000


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    Attributes:
        horizon_slots: last slot boundary simulated; ``None`` picks a horizon
            past which an unramped run has probability below 1e-12.
        advertised_quality: the ``Q_a`` an adversarial seller claims
            (defaults to ``params.Q_a``).
        uncensored: keep tracking a dropped-out seller's score past ``T_w``
            (without counting gains) so ramp-up time is observed unconditionally.
        tail_correction: replace the reputable phase by its expectation.
        engine: ``"auto"`` uses the vectorized path when it applies.
    """

    runs: int = 100_000
    seed: int = 0
    horizon_slots: int | None = None
    regime: Regime = "baseline"
    policy: InsurancePolicy | None = None
    advertised_quality: float | None = None
    uncensored: bool = True
    tail_correction: bool = True
    engine: Literal["auto", "general"] = "auto"

    def __post_init__(self):
        if self.runs < 1:
            raise DomainError("runs must be at least 1")
        if self.regime not in REGIMES:
            raise DomainError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.regime != "baseline" and self.policy is None:
            raise DomainError(f"regime {self.regime!r} needs an insurance policy")
        if self.horizon_slots is not None and self.horizon_slots < 1:
            raise DomainError("horizon_slots must be positive")
        if self.engine not in ("auto", "general"):
            raise DomainError(f"unknown engine {self.engine!r}")

    @property
    def insured(self) -> bool:
        return self.regime != "baseline"


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> EstimateWithCI:
        """Mean and standard error with exactly rounded (order-free) sums."""
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            return cls(math.nan, math.nan, 0)
        mean = math.fsum(x) / n
        if n == 1:
            return cls(mean, math.nan, 1)
        var = math.fsum((x - mean) ** 2) / (n - 1)
        return cls(mean, math.sqrt(var / n), n)

    def z_score(self, value: float) -> float:
        diff = abs(self.mean - value)
        if diff == 0.0:
            return 0.0
        return diff / self.stderr if self.stderr > 0.0 else math.inf


@dataclass(frozen=True)
class SellerTrajectory:
    """One simulated seller lifetime.

    ``slot_counts[l]`` is the number of (gain-bearing) sales in slot ``l``;
    every sale of the run receives the same ``rating`` because the product
    quality is deterministic. Sales of a dropped-out seller's shadow
    continuation are not recorded.
    """

    run_index: int
    seed: int
    d: float
    T_w: float
    slot_counts: np.ndarray
    rating: int
    ramp_up_day: float | None
    discounted_sales: float
    u: float
    fee: float
    certificate_history: tuple[CertificateState, ...] = ()
    settlements: tuple[SlotSettlement, ...] = ()
    supplemental_payments: float = 0.0
    late_insured_sales: int = 0
    horizon_truncated: bool = False
    recorded_scores: np.ndarray | None = None
    split_slot: tuple[int, float] | None = None

    @property
    def dropped_out(self) -> bool:
        return self.ramp_up_day is None or self.ramp_up_day > self.T_w

    @property
    def censored_ramp_up_day(self) -> float | None:
        return None if self.dropped_out else self.ramp_up_day

    @property
    def discounted_gain(self) -> float:
        return self.u * self.discounted_sales

    @property
    def operator_gain(self) -> float:
        return self.fee * self.discounted_sales

    @property
    def n_transactions(self) -> int:
        return int(self.slot_counts.sum())

    @property
    def feedback(self) -> list[SlotFeedback]:
        counts = [int(c) for c in self.slot_counts]
        if self.rating > 0:
            return [SlotFeedback(N_plus=c) for c in counts]
        if self.rating == 0:
            return [SlotFeedback(N_zero=c) for c in counts]
        return [SlotFeedback(N_minus=c) for c in counts]

    @property
    def scores(self) -> np.ndarray:
        """Score ``r(tau)`` at each slot boundary, from feedback of slots ``< tau``."""
        return np.concatenate(([0], np.cumsum(self.slot_counts) * self.rating))

    @property
    def deposit_lost(self) -> float:
        return sum(s.deduction for s in self.settlements)

    @property
    def final_certificate(self) -> CertificateState | None:
        return self.certificate_history[-1] if self.certificate_history else None

    @property
    def transaction_times(self) -> np.ndarray:
        """Arrival times (days), regenerated from the run's per-slot time streams."""
        out = []
        for slot, count in enumerate(self.slot_counts):
            if count:
                u = _time_rng(self.seed, self.run_index, slot).random(int(count))
                out.append(self._slot_times(slot, np.sort(u)))
        return np.concatenate(out) if out else np.empty(0)

    def _slot_times(self, slot: int, u: np.ndarray) -> np.ndarray:
        t0 = slot * self.d
        if self.split_slot is None or self.split_slot[0] != slot:
            return t0 + u * self.d
        # the rate changes at T_d inside this slot; invert its cumulative intensity
        _, T_d = self.split_slot
        w_ins = self._split_weight
        head = T_d - t0
        return np.where(
            u < w_ins,
            t0 + u / w_ins * head if w_ins > 0 else t0,
            T_d + (u - w_ins) / (1.0 - w_ins) * (self.d - head) if w_ins < 1 else T_d,
        )

    _split_weight: float = field(default=1.0, repr=False)


def _count_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run_index, 0))))


def _time_rng(seed: int, run_index: int, slot: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run_index, 1, slot)))
    )


# per-configuration constants


@dataclass(frozen=True)
class _Plan:
    params: MarketParams
    config: SimConfig
    horizon: int
    Q_adv: float
    rating: int
    fast: bool
    u: float
    fee: float
    T_d: float
    rate_avg: float
    rate_rep: float
    rate_ins: float
    pre_means: np.ndarray
    disc: np.ndarray


def _purchase(params: MarketParams, Q_a: float, trusted: bool) -> float:
    model = params.adoption
    if isinstance(model, TabulatedAdoption):
        return model.P_br if trusted else model.P_ba
    return model(estimated_quality(Q_a, params.beta, trusted), params.p)


def _pre_ramp_means(rate_avg: float, rate_ins: float, T_d: float, d: float, n: int) -> np.ndarray:
    """Mean sales per slot before ramp-up (honest seller, certificate never revoked)."""
    t0 = np.arange(n, dtype=float) * d
    ins_len = np.clip(T_d - t0, 0.0, d)
    return rate_ins * ins_len + rate_avg * (d - ins_len)


def safe_horizon_slots(params: MarketParams, config: SimConfig) -> int:
    """Smallest horizon past which an honest run is still unramped w.p. < 1e-12."""
    n_w = params.patience_slots
    T_d = config.policy.T_d if config.insured else 0.0
    Q = config.advertised_quality if config.advertised_quality is not None else params.Q_a
    rate_avg = params.lambda1 * _purchase(params, Q, False)
    rate_ins = params.lambda2 * _purchase(params, Q, True) if config.insured else rate_avg
    if not config.uncensored:
        return n_w + 1
    if rate_avg == 0.0:
        return max(2 * n_w, int(math.ceil(T_d / params.d)) + 2)
    n = max(n_w + 1, 64)
    while n < _MAX_AUTO_HORIZON:
        edges = np.arange(n + 1, dtype=float) * params.d
        ins = np.minimum(edges, T_d)
        cum = rate_ins * ins + rate_avg * (edges - ins)
        surv = poisson_cdf_array(int(params.r_h) - 1, cum)
        hit = np.nonzero(surv < HORIZON_SURVIVAL)[0]
        if hit.size:
            return int(max(hit[0] + 1, n_w + 1))
        n *= 2
    return _MAX_AUTO_HORIZON


@functools.lru_cache(maxsize=64)
def _plan(params: MarketParams, config: SimConfig) -> _Plan:
    horizon = config.horizon_slots or safe_horizon_slots(params, config)
    n_w = params.patience_slots
    if horizon < n_w:
        raise DomainError(f"horizon of {horizon} slots ends before the patience T_w={params.T_w}")
    Q_adv = params.Q_a if config.advertised_quality is None else config.advertised_quality
    if config.regime != "insured_adversarial" and config.advertised_quality is not None:
        raise DomainError("advertised_quality only applies to the adversarial regime")
    if not params.Q_i <= Q_adv <= 1.0:
        raise DomainError("advertised quality must lie in [Q_i, 1]")
    rating = feedback_rating(params.Q_i, Q_adv, params.gamma)
    T_d = config.policy.T_d if config.insured else 0.0
    rate_avg = params.lambda1 * _purchase(params, Q_adv, False)
    rate_rep = params.lambda2 * _purchase(params, Q_adv, True)
    rate_ins = rate_rep if config.insured else rate_avg
    fast = (
        config.engine == "auto"
        and isinstance(params.adoption, TabulatedAdoption)
        and rating > 0
        and config.tail_correction
    )
    return _Plan(
        params=params,
        config=config,
        horizon=horizon,
        Q_adv=Q_adv,
        rating=rating,
        fast=fast,
        u=unit_profit(params),
        fee=transaction_fee(params),
        T_d=T_d,
        rate_avg=rate_avg,
        rate_rep=rate_rep,
        rate_ins=rate_ins,
        pre_means=_pre_ramp_means(rate_avg, rate_ins, T_d, params.d, horizon),
        disc=params.delta ** np.arange(1, horizon + 1, dtype=float),
    )


def _tail(plan: _Plan, ramp_slot: int) -> float:
    delta = plan.params.delta
    if delta >= 1.0:
        raise DivergenceError("undiscounted reputable phase has infinite gain; disable tail_correction")
    return plan.rate_rep * plan.params.d * delta ** (ramp_slot + 1) / (1.0 - delta)


def _split_info(plan: _Plan, counts_len: int) -> tuple[tuple[int, float] | None, float]:
    T_d, d = plan.T_d, plan.params.d
    k = math.floor(T_d / d)
    if T_d <= 0.0 or T_d == k * d or k >= counts_len:
        return None, 1.0
    m_ins = plan.rate_ins * (T_d - k * d)
    m_all = m_ins + plan.rate_avg * (d - (T_d - k * d))
    return (k, T_d), (m_ins / m_all if m_all > 0 else 1.0)


@functools.lru_cache(maxsize=64)
def _honest_certificate_history(policy: InsurancePolicy) -> tuple[CertificateState, ...]:
    cert = issue_certificate(policy, ReputationProfile())
    expired = expire_and_clear(cert, cert.expires_at)
    return cert, expired, clear_certificate(expired, expired.clears_at)


# engines


def _simulate_fast(plan: _Plan, run_index: int) -> SellerTrajectory:
    params, cfg = plan.params, plan.config
    rng = _count_rng(cfg.seed, run_index)
    n_w = params.patience_slots
    r_h = int(params.r_h)
    counts = rng.poisson(plan.pre_means[:n_w])
    cum = np.cumsum(counts)
    ramp_slot = None
    truncated = False
    if cum.size and cum[-1] >= r_h:
        idx = int(np.searchsorted(cum, r_h))
        ramp_slot = idx + 1
        real = counts[: idx + 1]
        sales = float(real @ plan.disc[: idx + 1]) + _tail(plan, ramp_slot)
    else:
        real = counts
        sales = float(counts @ plan.disc[:n_w])
        if cfg.uncensored:
            total = int(cum[-1]) if cum.size else 0
            start = n_w
            block = n_w
            while start < plan.horizon:
                stop = min(start + block, plan.horizon)
                more = np.cumsum(rng.poisson(plan.pre_means[start:stop])) + total
                if more.size and more[-1] >= r_h:
                    ramp_slot = start + int(np.searchsorted(more, r_h)) + 1
                    break
                total = int(more[-1]) if more.size else total
                start = stop
                block *= 2
            truncated = ramp_slot is None
    history = ()
    if cfg.insured:
        history = _honest_certificate_history(cfg.policy)
    split, weight = _split_info(plan, real.size)
    return SellerTrajectory(
        run_index=run_index,
        seed=cfg.seed,
        d=params.d,
        T_w=params.T_w,
        slot_counts=real,
        rating=plan.rating,
        ramp_up_day=None if ramp_slot is None else ramp_slot * params.d,
        discounted_sales=sales,
        u=plan.u,
        fee=plan.fee,
        certificate_history=history,
        horizon_truncated=truncated,
        split_slot=split,
        _split_weight=weight,
    )


def _feedback_of(rating: int, n: int) -> SlotFeedback:
    if rating > 0:
        return SlotFeedback(N_plus=n)
    if rating == 0:
        return SlotFeedback(N_zero=n)
    return SlotFeedback(N_minus=n)


def _simulate_general(plan: _Plan, run_index: int) -> SellerTrajectory:
    params, cfg = plan.params, plan.config
    rng = _count_rng(cfg.seed, run_index)
    d, delta = params.d, params.delta
    n_w = params.patience_slots
    r_h = int(params.r_h)
    rating = plan.rating
    functional = isinstance(params.adoption, FunctionalAdoption)

    profile = ReputationProfile()
    cert = issue_certificate(cfg.policy, profile) if cfg.insured else None
    history = [cert] if cert is not None else []
    settlements: list[SlotSettlement] = []
    counts: list[int] = []
    scores: list[int] = []
    supplemental = 0.0
    late = 0
    sales = 0.0
    ramp_slot = None
    departed = False
    truncated = False
    split = None
    split_weight = 1.0
    pending = None  # (slot, n_insured, n_uninsured, real)

    for tau in range(plan.horizon + 1):
        t0 = tau * d
        # an expiry inside the previous slot takes effect before its sales settle
        if cert is not None and cert.is_active and t0 >= cert.expires_at:
            cert = expire_and_clear(cert, cert.expires_at)
            history.append(cert)
        # feedback for the previous slot's sales lands now
        if pending is not None:
            slot, n_ins, n_unins, real = pending
            profile = update_profile(profile, _feedback_of(rating, n_ins + n_unins))
            paid = n_unins
            if n_ins:
                if cert.status is CertStatus.CLEARED:
                    late += n_ins
                    if rating < 0:
                        supplemental += params.C_S * n_ins
                else:
                    cert_before = cert
                    cert, rec = settle_slot(
                        cert, _feedback_of(rating, n_ins), params, profile, slot=slot, now=t0
                    )
                    settlements.append(rec)
                    supplemental += rec.supplemental
                    paid += rec.n_paid
                    if cert.status is not cert_before.status:
                        history.append(cert)
            elif cert is not None and cert.is_active:
                before = cert.status
                cert, rec = settle_slot(cert, SlotFeedback(), params, profile, slot=slot, now=t0)
                if cert.status is not before:
                    settlements.append(rec)
                    history.append(cert)
            if real:
                sales += paid * delta ** (slot + 1)
        scores.append(profile.r)
        if ramp_slot is None and profile.r >= r_h:
            ramp_slot = tau
            if not departed and cfg.tail_correction:
                sales += _tail(plan, ramp_slot)
        if cert is not None and cert.status is not CertStatus.CLEARED:
            new = expire_and_clear(cert, t0)
            if new.status is not cert.status:
                history.append(new)
            cert = new
        if ramp_slot is None and tau == n_w:
            departed = True

        if ramp_slot is not None:
            keep_going = not departed and not cfg.tail_correction
        elif departed:
            keep_going = cfg.uncensored
        else:
            keep_going = True
        if not keep_going:
            break
        if tau == plan.horizon:
            truncated = ramp_slot is None and (cfg.uncensored or not departed)
            break

        # sales of slot tau
        ins_len = 0.0
        if cert is not None and cert.is_active:
            ins_len = min(max(cert.expires_at - t0, 0.0), d)
        trusted_rest = is_reputable(profile, r_h, params.theta)
        if functional:
            lam_rest = params.lambda2 if trusted_rest else params.lambda1
            n_ins = 0
            if ins_len > 0.0:
                buyers = rng.poisson(params.lambda2 * ins_len)
                n_ins = int(rng.binomial(buyers, _purchase(params, plan.Q_adv, True)))
            buyers = rng.poisson(lam_rest * (d - ins_len))
            n_rest = int(rng.binomial(buyers, _purchase(params, plan.Q_adv, trusted_rest)))
            n = n_ins + n_rest
            if 0.0 < ins_len < d and not departed:
                m_ins = params.lambda2 * ins_len * _purchase(params, plan.Q_adv, True)
                m_all = m_ins + lam_rest * (d - ins_len) * _purchase(params, plan.Q_adv, trusted_rest)
                split, split_weight = (tau, cert.expires_at), (m_ins / m_all if m_all > 0 else 1.0)
        else:
            rate_rest = plan.rate_rep if trusted_rest else plan.rate_avg
            m_ins = plan.rate_ins * ins_len
            m_all = m_ins + rate_rest * (d - ins_len)
            n = int(rng.poisson(m_all))
            if ins_len >= d:
                n_ins = n
            elif ins_len > 0.0:
                w = m_ins / m_all if m_all > 0 else 1.0
                if not departed:
                    split, split_weight = (tau, cert.expires_at), w
                n_ins = int(np.count_nonzero(_time_rng(cfg.seed, run_index, tau).random(n) < w)) if n else 0
            else:
                n_ins = 0
        if departed:
            n_ins = 0
        else:
            counts.append(n)
        pending = (tau, n_ins, n - n_ins, not departed)

    if cert is not None and cert.status is not CertStatus.CLEARED:
        # no further sales need settling; run the certificate clock out
        if cert.is_active:
            cert = expire_and_clear(cert, cert.expires_at)
            history.append(cert)
        cert = clear_certificate(cert, cert.clears_at)
        history.append(cert)

    return SellerTrajectory(
        run_index=run_index,
        seed=cfg.seed,
        d=d,
        T_w=params.T_w,
        slot_counts=np.asarray(counts, dtype=np.int64),
        rating=rating,
        ramp_up_day=None if ramp_slot is None else ramp_slot * d,
        discounted_sales=sales,
        u=plan.u,
        fee=plan.fee,
        certificate_history=tuple(history),
        settlements=tuple(settlements),
        supplemental_payments=supplemental,
        late_insured_sales=late,
        horizon_truncated=truncated,
        recorded_scores=np.asarray(scores, dtype=np.int64),
        split_slot=split,
        _split_weight=split_weight,
    )


def simulate_seller(params: MarketParams, config: SimConfig, run_index: int) -> SellerTrajectory:
    """Simulate the lifetime of one seller; run ``run_index`` of ``config``."""
    plan = _plan(params, config)
    if plan.fast:
        return _simulate_fast(plan, run_index)
    return _simulate_general(plan, run_index)


# aggregation


@dataclass(frozen=True)
class MonteCarloMeasures:
    ramp_up: EstimateWithCI
    drop_out: EstimateWithCI
    seller_gain: EstimateWithCI
    operator_gain: EstimateWithCI
    truncated_runs: tuple[int, ...] = ()

    def as_dict(self) -> dict[str, EstimateWithCI]:
        return {
            "ramp_up": self.ramp_up,
            "drop_out": self.drop_out,
            "seller_gain": self.seller_gain,
            "operator_gain": self.operator_gain,
        }


def _run_block(params: MarketParams, config: SimConfig, start: int, stop: int):
    plan = _plan(params, config)
    sim = _simulate_fast if plan.fast else _simulate_general
    n = stop - start
    ramp = np.empty(n)
    dropped = np.empty(n)
    sales = np.empty(n)
    truncated = []
    for j, i in enumerate(range(start, stop)):
        tr = sim(plan, i)
        ramp[j] = math.nan if tr.ramp_up_day is None else tr.ramp_up_day
        dropped[j] = tr.dropped_out
        sales[j] = tr.discounted_sales
        if tr.horizon_truncated:
            truncated.append(i)
    return ramp, dropped, sales, truncated


def monte_carlo_measures(
    params: MarketParams,
    config: SimConfig,
    *,
    strict: bool = True,
    workers: int = 1,
) -> MonteCarloMeasures:
    """Estimate the four measures over runs ``0 .. runs-1``.

    Results depend only on ``(params, config)``: each run has its own
    streams and all sums are exactly rounded, so ``workers`` never changes
    the output.

    Raises:
        HorizonError: (``strict``) some uncensored run had not ramped up by
            the horizon, so the ramp-up mean would be biased.
    """
    if config.runs < 100:
        raise DomainError("monte_carlo_measures needs at least 100 runs")
    _plan(params, config)  # validate before forking
    if workers > 1:
        bounds = np.linspace(0, config.runs, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _run_block,
                    [params] * workers,
                    [config] * workers,
                    bounds[:-1].tolist(),
                    bounds[1:].tolist(),
                )
            )
    else:
        parts = [_run_block(params, config, 0, config.runs)]
    ramp = np.concatenate([p[0] for p in parts])
    dropped = np.concatenate([p[1] for p in parts])
    sales = np.concatenate([p[2] for p in parts])
    truncated = tuple(i for p in parts for i in p[3])
    if truncated:
        msg = (
            f"{len(truncated)} of {config.runs} runs had not ramped up by the horizon "
            f"(first: {list(truncated[:10])}); raise horizon_slots"
        )
        if strict:
            raise HorizonError(msg, truncated_runs=truncated)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    u, fee = unit_profit(params), transaction_fee(params)
    return MonteCarloMeasures(
        ramp_up=EstimateWithCI.from_samples(ramp[~np.isnan(ramp)]),
        drop_out=EstimateWithCI.from_samples(dropped),
        seller_gain=EstimateWithCI.from_samples(u * sales),
        operator_gain=EstimateWithCI.from_samples(fee * sales),
        truncated_runs=truncated,
    )


# protocol audit


@dataclass(frozen=True)
class AuditReport:
    runs: int
    settlements_checked: int
    revoked_runs: int
    total_deducted: float
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def _audit_run(tr: SellerTrajectory, params: MarketParams, policy: InsurancePolicy) -> list[str]:
    out = []
    tag = f"run {tr.run_index}"
    p = params.p
    honest = tr.rating > 0
    deposit = policy.D_I
    active = True
    for rec in tr.settlements:
        where = f"{tag}, slot {rec.slot}"
        if rec.status_before is CertStatus.CLEARED:
            out.append(f"{where}: settlement after clearing")
        if not math.isclose(rec.deposit_before, deposit, rel_tol=0.0, abs_tol=1e-9):
            out.append(f"{where}: deposit ledger jumped from {deposit} to {rec.deposit_before}")
        n = rec.n_paid + rec.n_refunded
        total = rec.seller_payout + rec.operator_fee + rec.buyer_refund
        if not math.isclose(total, n * p, rel_tol=1e-12, abs_tol=1e-12):
            out.append(f"{where}: payments {total} do not conserve {n} x price {p}")
        if not math.isclose(rec.buyer_refund, rec.n_refunded * p, rel_tol=1e-12, abs_tol=1e-12):
            out.append(f"{where}: buyer refunds {rec.buyer_refund} != {rec.n_refunded} x {p}")
        if tr.rating < 0 and rec.n_paid:
            out.append(f"{where}: overstating seller was paid for {rec.n_paid} sales")
        if tr.rating >= 0 and rec.n_refunded:
            out.append(f"{where}: {rec.n_refunded} refunds without negative feedback")
        owed = params.C_S * rec.n_refunded
        if rec.deduction < min(rec.deposit_before, owed) - 1e-9:
            out.append(f"{where}: loss {rec.deduction} below min(deposit, C_S N) = {min(rec.deposit_before, owed)}")
        if not math.isclose(rec.deduction + rec.supplemental, owed, rel_tol=1e-12, abs_tol=1e-12):
            out.append(f"{where}: deduction plus supplement does not cover C_S N")
        if rec.deposit_after < 0.0:
            out.append(f"{where}: negative deposit")
        if active and rec.status_after is CertStatus.REVOKED:
            active = False
        elif active and rec.deposit_after <= policy.D_hat and rec.status_before is CertStatus.ACTIVE:
            out.append(f"{where}: deposit {rec.deposit_after} at threshold but not revoked")
        deposit = rec.deposit_after
    if tr.late_insured_sales and policy.T_c >= params.d:
        out.append(f"{tag}: {tr.late_insured_sales} insured sales settled after clearing")
    final = tr.final_certificate
    if final is None or final.status is not CertStatus.CLEARED:
        out.append(f"{tag}: certificate never cleared")
    else:
        statuses = [c.status for c in tr.certificate_history]
        allowed = {
            (CertStatus.ACTIVE, CertStatus.EXPIRED),
            (CertStatus.ACTIVE, CertStatus.REVOKED),
            (CertStatus.EXPIRED, CertStatus.CLEARED),
            (CertStatus.REVOKED, CertStatus.CLEARED),
        }
        for a, b in zip(statuses[:-1], statuses[1:]):
            if (a, b) not in allowed:
                out.append(f"{tag}: illegal transition {a.value} -> {b.value}")
        revoked = [c for c in tr.certificate_history if c.status is CertStatus.REVOKED]
        if revoked:
            why = revoked[0].revoke_reason
            snap = revoked[0]
            if why == "deposit" and snap.remaining_deposit > policy.D_hat:
                out.append(f"{tag}: revoked for deposit above threshold")
            if why == "consistency" and snap.profile_snapshot.positive_fraction >= params.theta:
                out.append(f"{tag}: revoked for consistency with positive fraction at theta")
        if honest:
            if revoked or tr.deposit_lost != 0.0:
                out.append(f"{tag}: honest seller lost deposit or was revoked")
            if final.refunded != policy.D_I:
                out.append(f"{tag}: honest seller refunded {final.refunded}, not {policy.D_I}")
        elif not math.isclose(final.refunded + tr.deposit_lost, policy.D_I, rel_tol=1e-12):
            out.append(f"{tag}: refund plus deductions do not add up to the deposit")
    return out


def adversarial_protocol_audit(
    params: MarketParams,
    policy: InsurancePolicy,
    config: SimConfig,
    *,
    raise_on_failure: bool = True,
) -> AuditReport:
    """Run the certificate protocol on every run of ``config`` and check it.

    Checks per settled slot: an overstating seller is refunded on every
    sale and loses ``min(deposit, C_S N)``; payments are conserved and
    refunds equal the price; the deposit ledger is continuous; no
    settlement follows clearing; revocations are justified. Honest sellers
    must expire unrevoked and recover the full deposit.

    Raises:
        AuditFailure: any check failed (names run and slot).
    """
    if config.regime != "insured_adversarial":
        raise DomainError("the protocol audit needs the insured_adversarial regime")
    if config.policy != policy:
        raise DomainError("config.policy must be the audited policy")
    plan = _plan(params, config)
    failures: list[str] = []
    checked = revoked = 0
    deducted = 0.0
    for i in range(config.runs):
        tr = _simulate_general(plan, i)
        failures.extend(_audit_run(tr, params, policy))
        checked += len(tr.settlements)
        revoked += any(c.status is CertStatus.REVOKED for c in tr.certificate_history)
        deducted += tr.deposit_lost
    report = AuditReport(config.runs, checked, revoked, deducted, tuple(failures))
    if failures and raise_on_failure:
        shown = "\n".join(failures[:20])
        raise AuditFailure(f"{len(failures)} protocol violations:\n{shown}")
    return report
