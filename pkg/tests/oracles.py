"""Independent high-precision oracles for the analytic evaluators."""

import mpmath


def _F(r_h, m):
    # P[Poisson(m) <= r_h - 1]
    if m == 0:
        return mpmath.mpf(1)
    return mpmath.gammainc(r_h, mpmath.mpf(m), mpmath.inf, regularized=True)


def ramp_up_series(proc, cutoff=mpmath.mpf("1e-30")):
    """d * sum_{tau>=1} P[fewer than r_h sales in slots 0..tau-2], summed in mpmath."""
    total = mpmath.mpf(0)
    tau = 1
    while True:
        term = _F(proc.r_h, proc.cum_mean((tau - 1) * proc.d))
        total += term
        if term < cutoff:
            return float(proc.d * total)
        tau += 1


def slot_sum_profit(proc):
    """Expected discounted gain by summing over the slot in which ramp-up happens.

    A slot's sale count is independent of the past, so the expected
    discounted sales of slot l given the seller has not ramped up before it
    is ``m_l * P[not ramped]``; the reputable tail starts the slot after the
    r_h-th sale.
    """
    n = int(round(proc.T_w / proc.d))
    delta = mpmath.mpf(proc.delta)
    tail = proc.reputable_rate * proc.d / (1 - delta)
    total = mpmath.mpf(0)
    for l in range(n):
        lo = proc.cum_mean(l * proc.d)
        hi = proc.cum_mean((l + 1) * proc.d)
        alive, after = _F(proc.r_h, lo), _F(proc.r_h, hi)
        total += delta ** (l + 1) * (hi - lo) * alive + tail * delta ** (l + 2) * (alive - after)
    return float(proc.u * total)
