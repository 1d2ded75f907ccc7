"""Shared evaluator for a new seller's ramp-up process.

Before ramping up, completed sales arrive as a Poisson process whose rate
is piecewise constant: ``insured_rate`` on ``[0, T_d)`` (an active
insurance certificate) and ``average_rate`` afterwards. Once the score
reaches ``r_h`` the seller is reputable and sells at ``reputable_rate`` for
ever. The baseline system is the special case ``T_d = 0``.

Every gain formula is reduced to one dimension through the order-statistics
property of Poisson arrivals: given ``k`` arrivals in ``(0, s)``, their times
are i.i.d. with density ``rate(t) / Lambda(s)``, so the expected discounted
payment of each one is ``D(s) / Lambda(s)`` where ``D`` integrates
``rate(t) * delta**ceil(t/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError
from .numerics import (
    integrate_1d,
    poisson_cdf,
    poisson_cdf_array,
    poisson_pmf,
    uniform_ceil_discount_mean,
)

DEFAULT_SURVIVAL_CUTOFF = 1e-12
DEFAULT_QUAD_TOL = 1e-8
ERLANG_MASS_CUTOFF = 1e-12
MC_CHUNK = 10_000
_MAX_SLOTS = 50_000_000


@dataclass(frozen=True)
class RampProcess:
    """Rate profile of a seller that is honest and never revoked.

    Attributes:
        average_rate: sales per day while labeled average and uninsured.
        reputable_rate: sales per day once reputable (also while insured).
        T_d: insurance duration in days (0 for no insurance).
    """

    average_rate: float
    reputable_rate: float
    r_h: int
    d: float
    T_w: float
    delta: float
    u: float = 1.0
    T_d: float = 0.0

    def __post_init__(self):
        if self.average_rate < 0 or self.reputable_rate < 0:
            raise DomainError("rates must be nonnegative")
        if self.T_d < 0:
            raise DomainError("insurance duration must be nonnegative")

    @property
    def insured_rate(self) -> float:
        return self.reputable_rate

    def rate(self, t: float) -> float:
        return self.insured_rate if t < self.T_d else self.average_rate

    def cum_mean(self, t: float) -> float:
        """Expected number of pre-ramp sales in ``[0, t]``."""
        head = min(t, self.T_d)
        return self.insured_rate * head + self.average_rate * max(0.0, t - self.T_d)

    def slot_means(self, n_slots: int) -> np.ndarray:
        edges = np.arange(n_slots + 1) * self.d
        head = np.minimum(edges, self.T_d)
        cum = self.insured_rate * head + self.average_rate * np.maximum(0.0, edges - self.T_d)
        return np.diff(cum)

    def discounted_mass(self, t: float) -> float:
        """Integral of ``rate(s) * delta**ceil(s/d)`` over ``[0, t]``."""
        total = 0.0
        head = min(t, self.T_d)
        if head > 0.0 and self.insured_rate > 0.0:
            total += self.insured_rate * head * uniform_ceil_discount_mean(self.delta, self.d, 0.0, head)
        if t > self.T_d and self.average_rate > 0.0:
            total += (
                self.average_rate
                * (t - self.T_d)
                * uniform_ceil_discount_mean(self.delta, self.d, self.T_d, t)
            )
        return total

    # ramp-up time and drop-out

    def expected_ramp_up_or_inf(self) -> float:
        """As :meth:`expected_ramp_up`, but ``inf`` where it diverges."""
        try:
            return self.expected_ramp_up()
        except DivergenceError:
            return math.inf

    def expected_ramp_up(self, survival_cutoff: float = DEFAULT_SURVIVAL_CUTOFF) -> float:
        """d * sum over slots tau >= 1 of P[score at slot tau-1 is below r_h].

        The score at slot ``tau - 1`` counts sales in slots ``0 .. tau-2``,
        hence the Poisson mean ``Lambda((tau - 1) d)``.
        """
        k = self.r_h - 1
        if self.average_rate == 0.0:
            limit = poisson_cdf(k, self.cum_mean(self.T_d))
            if limit > 0.0:
                raise DivergenceError("zero pre-ramp rate: expected ramp-up time is infinite")
        total = 0.0
        start = 0
        block = 1024
        while start < _MAX_SLOTS:
            idx = np.arange(start, start + block, dtype=float)
            edges = idx * self.d
            head = np.minimum(edges, self.T_d)
            means = self.insured_rate * head + self.average_rate * np.maximum(0.0, edges - self.T_d)
            surv = poisson_cdf_array(k, means)
            below = np.nonzero(surv < survival_cutoff)[0]
            if below.size:
                total += math.fsum(surv[: below[0]])
                return self.d * total
            total += math.fsum(surv)
            start += block
            block = min(block * 2, 1 << 20)
        raise DivergenceError("ramp-up series did not converge within the slot limit")

    def drop_out(self) -> float:
        return poisson_cdf(self.r_h - 1, self.cum_mean(self.T_w))

    # long-term discounted profit

    def _tail_factor(self) -> float:
        if self.delta >= 1.0:
            raise DivergenceError("undiscounted reputable phase has infinite gain")
        return self.reputable_rate * self.d / (1.0 - self.delta)

    def profit_dropout_branch(self) -> float:
        """E[gain; not ramped by T_w]."""
        m = self.cum_mean(self.T_w)
        if m == 0.0:
            return 0.0
        # sum_{k < r_h} k pmf(k, m) == m * cdf(r_h - 2, m)
        expected_count = m * poisson_cdf(self.r_h - 2, m)
        per_sale = self.discounted_mass(self.T_w) / m
        return self.u * per_sale * expected_count

    def _ramp_integrand(self, t: float) -> float:
        lam_t = self.cum_mean(t)
        density = self.rate(t) * poisson_pmf(self.r_h - 1, lam_t)
        if density == 0.0:
            return 0.0
        c = math.ceil(t / self.d)
        disc = self.delta**c
        earlier = (self.r_h - 1) * self.discounted_mass(t) / lam_t if lam_t > 0.0 else 0.0
        rest_of_slot = self.cum_mean(c * self.d) - lam_t
        tail = self._tail_factor() * self.delta ** (c + 1)
        return density * (earlier + disc + disc * rest_of_slot + tail)

    def _ramp_window(self) -> tuple[float, float] | None:
        """Sub-interval of (0, T_w) outside which the ramp-time mass is negligible."""
        n = int(round(self.T_w / self.d))
        edges = np.arange(n + 1) * self.d
        head = np.minimum(edges, self.T_d)
        cum = self.insured_rate * head + self.average_rate * np.maximum(0.0, edges - self.T_d)
        sf = np.where(cum > 0.0, special.pdtrc(self.r_h - 1, cum), 0.0)
        mass = np.diff(sf)
        keep = np.nonzero(mass >= ERLANG_MASS_CUTOFF)[0]
        if keep.size == 0:
            return None
        return float(edges[keep[0]]), float(edges[keep[-1] + 1])

    def ramp_probability(self) -> float:
        """P[ramped up by T_w]."""
        m = self.cum_mean(self.T_w)
        return float(special.pdtrc(self.r_h - 1, m)) if m > 0.0 else 0.0

    def profit_ramp_branch(self, tol: float = DEFAULT_QUAD_TOL) -> float:
        """E[gain; ramped by T_w], integrating over the r_h-th sale time."""
        if self.ramp_probability() == 0.0 or self.u == 0.0:
            return 0.0
        self._tail_factor()
        window = self._ramp_window()
        if window is None:
            return 0.0
        lo, hi = window
        val = integrate_1d(
            self._ramp_integrand, lo, hi, tol / abs(self.u),
            period=self.d, breakpoints=(self.T_d,),
        )
        return self.u * val

    def profit(self, tol: float = DEFAULT_QUAD_TOL) -> float:
        return self.profit_dropout_branch() + self.profit_ramp_branch(tol)

    def profit_monte_carlo(self, runs: int, seed: int) -> tuple[float, float]:
        """Sample per-slot sale counts up to T_w; add the closed-form reputable tail.

        A sale in slot ``l`` is paid in slot ``l + 1``, so it is discounted by
        ``delta**(l + 1)``. Runs are drawn in fixed chunks, each with its own
        stream spawned from ``(seed, chunk index)``.
        """
        if runs < 2:
            raise DomainError("need at least two Monte Carlo runs")
        n = int(round(self.T_w / self.d))
        means = self.slot_means(n)
        disc = self.delta ** np.arange(1, n + 1)
        ramp_possible = self.ramp_probability() > 0.0
        tail = self._tail_factor() if ramp_possible else 0.0
        samples = np.empty(runs)
        for chunk, start in enumerate(range(0, runs, MC_CHUNK)):
            size = min(MC_CHUNK, runs - start)
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
            counts = rng.poisson(means, size=(size, n))
            cum = np.cumsum(counts, axis=1)
            ramped = cum[:, -1] >= self.r_h
            s = np.argmax(cum >= self.r_h, axis=1)
            keep = np.arange(n)[None, :] <= np.where(ramped, s, n - 1)[:, None]
            gain = np.sum(np.where(keep, counts * disc, 0.0), axis=1)
            gain += np.where(ramped, tail * self.delta ** (s + 2.0), 0.0)
            samples[start : start + size] = gain
        samples *= self.u
        return float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(runs))
