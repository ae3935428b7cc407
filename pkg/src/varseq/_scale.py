"""Bracketing bisection for unit-level scalings of power modulars.

Every modular in the package reduces to

    rho(lam) = sum_i a_i lam**(-e_i) + max_k b_k lam**(-d_k)

with positive exponents, which is continuous and strictly decreasing in lam.
The solvers below return the smallest lam (to relative width ``tol``) with
rho(lam) <= 1, working on t = log(lam) so that extreme scalings never
overflow.
"""

from __future__ import annotations

import math

import numpy as np

MAX_EXPANSIONS = 128
MAX_ITERATIONS = 400


class ConvergenceError(RuntimeError):
    """Raised when a bracket cannot be established within 2**128 scalings."""


def _rows(x, k):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    return np.broadcast_to(x, (k, x.shape[1]))


def _margin(width: float) -> float:
    """Upward nudge of the returned scale so that rho <= 1 survives rounding
    when callers re-evaluate the modular on f / lam directly."""
    return min(width / 4, 1e-13)


def power_modular(t, log_a, expo, log_b=None, bexpo=None):
    """Evaluate rho at log-scalings ``t`` (one per row)."""
    t = np.asarray(t, dtype=float)[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        total = np.exp(log_a - expo * t).sum(axis=1) if log_a.shape[1] else np.zeros(len(t))
        if log_b is not None and log_b.shape[1]:
            total = total + np.exp(log_b - bexpo * t).max(axis=1)
    return total


def solve_unit_scale(log_a, expo, log_b=None, bexpo=None, tol: float = 1e-10) -> np.ndarray:
    """Row-wise inf{lam > 0 : rho(lam) <= 1}; 0 for rows with no mass.

    ``log_a`` has shape (rows, cells) with -inf marking absent terms; the
    exponent arrays broadcast against it. The returned value is the upper end
    of the final bracket pushed up by a rounding margin, so rho(result) <= 1
    holds even when rho is re-evaluated on the scaled values.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    log_a = np.atleast_2d(np.asarray(log_a, dtype=float))
    k = log_a.shape[0]
    expo = _rows(expo, k) if np.ndim(expo) else np.full(log_a.shape, float(expo))
    if log_b is not None:
        log_b = _rows(log_b, k)
        bexpo = _rows(bexpo, k) if np.ndim(bexpo) else np.full(log_b.shape, float(bexpo))

    fin_a = np.isfinite(log_a)
    with np.errstate(invalid="ignore"):
        lo_a = np.where(fin_a, log_a / expo, -np.inf)
    count = fin_a.sum(axis=1).astype(float)
    t_lo = lo_a.max(axis=1) if lo_a.shape[1] else np.full(k, -np.inf)
    if log_b is not None and log_b.shape[1]:
        fin_b = np.isfinite(log_b)
        lo_b = np.where(fin_b, log_b / bexpo, -np.inf)
        t_lo = np.maximum(t_lo, lo_b.max(axis=1))
        count = count + fin_b.any(axis=1)
    empty = ~np.isfinite(t_lo)
    result = np.zeros(k)
    if np.all(empty):
        return result

    logn = np.log(np.maximum(count, 1.0))[:, None]
    with np.errstate(invalid="ignore"):
        hi_a = np.where(fin_a, (log_a + logn) / expo, -np.inf)
    t_hi = hi_a.max(axis=1) if hi_a.shape[1] else np.full(k, -np.inf)
    if log_b is not None and log_b.shape[1]:
        hi_b = np.where(np.isfinite(log_b), (log_b + logn) / bexpo, -np.inf)
        t_hi = np.maximum(t_hi, hi_b.max(axis=1))

    rows = np.flatnonzero(~empty)
    la = log_a[rows]
    ea = expo[rows]
    lb = None if log_b is None else log_b[rows]
    eb = None if log_b is None else bexpo[rows]
    lo, hi = t_lo[rows].copy(), t_hi[rows].copy()
    hi = np.maximum(hi, lo)

    def rho(t, sel):
        return power_modular(t, la[sel], ea[sel], None if lb is None else lb[sel],
                             None if eb is None else eb[sel])

    all_sel = np.arange(len(rows))
    # rounding can leave the analytic bracket a hair off; expand if needed
    for _ in range(MAX_EXPANSIONS + 1):
        bad = rho(hi, all_sel) > 1.0
        if not bad.any():
            break
        hi[bad] += math.log(2.0)
    else:
        raise ConvergenceError("upper bracket not found within 2**128 scalings")
    at_lo = rho(lo, all_sel) <= 1.0
    hi[at_lo] = lo[at_lo]
    for _ in range(MAX_EXPANSIONS + 1):
        open_ = (rho(lo, all_sel) <= 1.0) & ~at_lo
        if not open_.any():
            break
        lo[open_] -= math.log(2.0)
    else:
        raise ConvergenceError("lower bracket not found within 2**128 scalings")

    width = -math.log1p(-tol)
    for _ in range(MAX_ITERATIONS):
        active = np.flatnonzero((hi - lo > width / 2) & ~at_lo)
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        ok = rho(mid, active) <= 1.0
        hi[active[ok]] = mid[ok]
        lo[active[~ok]] = mid[~ok]
    else:
        raise ConvergenceError("bisection did not reach the requested width")
    result[rows] = np.exp(hi + _margin(width))
    return result


def solve_decreasing(fn, guess: float, tol: float = 1e-10) -> float:
    """inf{mu > 0 : fn(mu) <= 1} for a scalar nonincreasing ``fn``.

    Brackets by doubling/halving from ``guess`` (at most 128 steps each way)
    and bisects in log(mu) to relative width ``tol``. Returns the upper end.
    """
    if not guess > 0 or not math.isfinite(guess):
        raise ValueError("guess must be positive and finite")
    lo = hi = math.log(guess)
    if fn(guess) <= 1.0:
        for _ in range(MAX_EXPANSIONS):
            lo -= math.log(2.0)
            if fn(math.exp(lo)) > 1.0:
                break
            hi = lo
        else:
            raise ConvergenceError("lower bracket not found within 2**128 scalings")
    else:
        for _ in range(MAX_EXPANSIONS):
            hi += math.log(2.0)
            if fn(math.exp(hi)) <= 1.0:
                break
            lo = hi
        else:
            raise ConvergenceError("upper bracket not found within 2**128 scalings")
    width = -math.log1p(-tol)
    for _ in range(MAX_ITERATIONS):
        if hi - lo <= width / 2:
            return math.exp(hi + _margin(width))
        mid = 0.5 * (lo + hi)
        if fn(math.exp(mid)) <= 1.0:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError("bisection did not reach the requested width")
