"""Analytic measures of the baseline (uninsured) reputation system."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .market import MarketParams, require_tabulated, transaction_fee, unit_profit
from .process import DEFAULT_QUAD_TOL, DEFAULT_SURVIVAL_CUTOFF, RampProcess

METHODS = ("quadrature", "monte_carlo")


@dataclass(frozen=True)
class BaselineMeasures:
    """The four baseline measures; ramp-up is ``inf`` when no sales can occur."""

    expected_ramp_up_days: float
    drop_out_prob: float
    seller_gain: float
    operator_gain: float


def ramp_process(params: MarketParams, T_d: float = 0.0) -> RampProcess:
    require_tabulated(params)
    return RampProcess(
        average_rate=params.lambda1 * params.adoption.P_ba,
        reputable_rate=params.lambda2 * params.adoption.P_br,
        r_h=int(params.r_h),
        d=params.d,
        T_w=params.T_w,
        delta=params.delta,
        u=unit_profit(params),
        T_d=T_d,
    )


def expected_ramp_up_time(
    params: MarketParams, survival_cutoff: float = DEFAULT_SURVIVAL_CUTOFF
) -> float:
    """Expected days until the score first reaches ``r_h`` (no patience cutoff).

    Raises:
        DivergenceError: the average-seller transaction rate is zero.
    """
    return ramp_process(params).expected_ramp_up(survival_cutoff)


def drop_out_probability(params: MarketParams) -> float:
    """P[score is still below r_h at slot T_w/d]."""
    return ramp_process(params).drop_out()


def run_profit(
    process: RampProcess,
    method: str,
    runs: int,
    seed: int,
    tol: float,
) -> tuple[float, float]:
    if method == "quadrature":
        return process.profit(tol), 0.0
    if method == "monte_carlo":
        return process.profit_monte_carlo(runs, seed)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


def long_term_profit(
    params: MarketParams,
    method: str = "quadrature",
    *,
    runs: int = 100_000,
    seed: int = 0,
    tol: float = DEFAULT_QUAD_TOL,
) -> tuple[float, float]:
    """Expected discounted profit of an honest new seller.

    Args:
        method: ``"quadrature"`` for the one-dimensional reduction, or
            ``"monte_carlo"`` to sample per-slot sales directly.
        runs, seed: Monte Carlo sample size and seed (ignored by quadrature).

    Returns:
        ``(gain, stderr)``; the standard error is 0 for quadrature.
    """
    return run_profit(ramp_process(params), method, runs, seed, tol)


def operator_gain_from(params: MarketParams, seller_gain: float) -> float:
    """Operator share of a seller gain: ``(alpha p / u) * G_s``."""
    u = unit_profit(params)
    if u == 0.0:
        raise DomainError("operator gain ratio is undefined for zero unit profit")
    return transaction_fee(params) / u * seller_gain


def baseline_measures(params: MarketParams) -> BaselineMeasures:
    process = ramp_process(params)
    gain = process.profit()
    return BaselineMeasures(
        expected_ramp_up_days=process.expected_ramp_up_or_inf(),
        drop_out_prob=process.drop_out(),
        seller_gain=gain,
        operator_gain=operator_gain_from(params, gain),
    )
