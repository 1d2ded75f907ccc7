"""Probability and integration primitives used by the analytic evaluators.

The Poisson mass function switches to a saddle-point (log-space) form once
either the count or the mean exceeds :data:`LOG_SPACE_CUTOFF`, so that
``mean**k`` never overflows and ``exp(-mean)`` never underflows on its own.
Cumulative probabilities are delegated to :func:`scipy.special.pdtr`, which
evaluates the regularized incomplete gamma function directly; tails are
always taken from the complement routine instead of summing terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from .errors import DomainError, EvaluationError

LOG_SPACE_CUTOFF = 30
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_mean(mean: float) -> float:
    mean = float(mean)
    if not mean >= 0.0:
        raise DomainError(f"Poisson mean must be nonnegative, got {mean!r}")
    return mean


def _stirlerr(n: float) -> float:
    """log(n!) - log(sqrt(2 pi n) (n/e)^n), the Stirling remainder."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    nn = n * n
    if n > 500:
        return (s0 - s1 / nn) / n
    if n > 80:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, m: float) -> float:
    """Deviance term x log(x/m) + m - x without cancellation near x == m."""
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v *= v
        j = 1
        while True:
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / m) + m - x


def poisson_pmf(k: int, mean: float) -> float:
    """Probability of exactly ``k`` events for a Poisson variable.

    Args:
        k: event count (nonnegative integer).
        mean: expected count.

    Returns:
        ``exp(-mean) * mean**k / k!``.
    """
    mean = _check_mean(mean)
    k = int(k)
    if k < 0:
        return 0.0
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    if k == 0:
        return math.exp(-mean)
    if k > LOG_SPACE_CUTOFF or mean > LOG_SPACE_CUTOFF:
        return math.exp(-_stirlerr(k) - _bd0(k, mean)) / math.sqrt(2.0 * math.pi * k)
    return math.exp(-mean) * mean**k / math.factorial(k)


def poisson_cdf(k: int, mean: float) -> float:
    """P[X <= k] for X ~ Poisson(mean); zero for negative ``k``."""
    mean = _check_mean(mean)
    k = math.floor(k)
    if k < 0:
        return 0.0
    if mean == 0.0:
        return 1.0
    return float(special.pdtr(k, mean))


def poisson_sf(k: int, mean: float) -> float:
    """P[X > k], evaluated as the complement of the CDF without subtraction."""
    mean = _check_mean(mean)
    k = math.floor(k)
    if k < 0:
        return 1.0
    if mean == 0.0:
        return 0.0
    return float(special.pdtrc(k, mean))


def poisson_cdf_array(k: int, means: np.ndarray) -> np.ndarray:
    """Vectorized :func:`poisson_cdf` over an array of means (fixed ``k``)."""
    means = np.asarray(means, dtype=float)
    if np.any(means < 0) or np.any(np.isnan(means)):
        raise DomainError("Poisson means must be nonnegative")
    if k < 0:
        return np.zeros_like(means)
    return np.where(means == 0.0, 1.0, special.pdtr(k, means))


def discounted_slot_sum(delta: float, from_slot: int, to_slot: float) -> float:
    """Sum of ``delta**tau`` for ``tau`` from ``from_slot`` to ``to_slot`` inclusive.

    ``to_slot`` may be ``math.inf`` when ``delta < 1``. An empty range
    (``to_slot < from_slot``) sums to zero.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"discount must lie in (0, 1], got {delta!r}")
    if from_slot < 0:
        raise DomainError("from_slot must be nonnegative")
    if math.isinf(to_slot):
        if delta == 1.0:
            raise DomainError("infinite undiscounted slot sum diverges")
        return delta**from_slot / (1.0 - delta)
    n = math.floor(to_slot) - from_slot + 1
    if n <= 0:
        return 0.0
    if delta == 1.0:
        return float(n)
    return delta**from_slot * -math.expm1(n * math.log(delta)) / (1.0 - delta)


def ceil_discount_integral(delta: float, d: float, t: float) -> float:
    """Integral of ``delta**ceil(s/d)`` over ``s`` in ``[0, t]``."""
    if t <= 0.0:
        return 0.0
    n = math.floor(t / d)
    full = d * discounted_slot_sum(delta, 1, n) if n >= 1 else 0.0
    return full + (t - n * d) * delta ** (n + 1)


def uniform_ceil_discount_mean(delta: float, d: float, t_lo: float, t_hi: float) -> float:
    """E[delta**ceil(t/d)] for ``t`` uniform on ``(t_lo, t_hi)``.

    Exact piecewise value: each slot fragment contributes its length times
    the discount of its slot index.
    """
    if not t_hi > t_lo or t_lo < 0.0:
        raise DomainError(f"need 0 <= t_lo < t_hi, got ({t_lo!r}, {t_hi!r})")
    if not d > 0.0:
        raise DomainError("slot length must be positive")
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"discount must lie in (0, 1], got {delta!r}")
    if delta == 1.0:
        return 1.0
    j_lo = math.floor(t_lo / d) + 1
    j_hi = max(math.ceil(t_hi / d), j_lo)
    if j_lo == j_hi:
        return delta**j_lo
    total = (j_lo * d - t_lo) * delta**j_lo
    total += d * discounted_slot_sum(delta, j_lo + 1, j_hi - 1)
    total += (t_hi - (j_hi - 1) * d) * delta**j_hi
    return total / (t_hi - t_lo)


def erlang_pdf(k: int, rate: float, t: float) -> float:
    """Density of the ``k``-th arrival time of a Poisson process with ``rate``."""
    if k < 1:
        raise DomainError("Erlang shape must be a positive integer")
    if not rate > 0.0:
        raise DomainError("Erlang rate must be positive")
    if t < 0.0:
        return 0.0
    return rate * poisson_pmf(k - 1, rate * t)


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-8,
    *,
    period: float | None = None,
    breakpoints: Iterable[float] = (),
) -> float:
    """Adaptive quadrature of a piecewise-smooth integrand.

    The interval is split at every multiple of ``period`` and at each extra
    breakpoint, and every smooth piece is integrated separately with
    Gauss-Kronrod (QUADPACK). The absolute tolerance is shared evenly
    between the pieces.

    Raises:
        EvaluationError: the integrand returned a non-finite value.
    """
    if not a < b:
        raise DomainError(f"need a < b, got ({a!r}, {b!r})")
    edges = {float(a), float(b)}
    if period is not None:
        if not period > 0.0:
            raise DomainError("period must be positive")
        if math.isinf(b):
            raise DomainError("a periodic split needs a finite upper limit")
        j = math.floor(a / period) + 1
        while j * period < b:
            edges.add(j * period)
            j += 1
    edges.update(x for x in breakpoints if a < x < b)
    grid = sorted(edges)

    def checked(x: float) -> float:
        y = f(x)
        if not math.isfinite(y):
            raise EvaluationError(f"integrand is not finite at {x!r}: {y!r}")
        return y

    per_piece = tol / (len(grid) - 1)
    total = 0.0
    for lo, hi in zip(grid[:-1], grid[1:]):
        if hi - lo <= 0.0:
            continue
        val, _ = integrate.quad(checked, lo, hi, epsabs=per_piece, epsrel=1e-13, limit=200)
        total += val
    return total


@dataclass(frozen=True)
class PoissonDist:
    """Poisson distribution with a fixed mean."""

    mean: float

    def __post_init__(self):
        _check_mean(self.mean)

    def pmf(self, k: int) -> float:
        return poisson_pmf(k, self.mean)

    def cdf(self, k: int) -> float:
        return poisson_cdf(k, self.mean)

    def sf(self, k: int) -> float:
        return poisson_sf(k, self.mean)


@dataclass(frozen=True)
class DiscountSpec:
    """Per-slot discount factor together with the slot length in days."""

    delta: float
    slot_length: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta!r}")
        if not self.slot_length > 0.0:
            raise DomainError("slot_length must be positive")

    def slot_sum(self, from_slot: int, to_slot: float = math.inf) -> float:
        return discounted_slot_sum(self.delta, from_slot, to_slot)

    def ceil_mean(self, t_lo: float, t_hi: float) -> float:
        return uniform_ceil_discount_mean(self.delta, self.slot_length, t_lo, t_hi)
