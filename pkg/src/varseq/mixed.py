"""Iterated mixed norms over a finite sequence of step functions.

``besov_*`` is the sum-outside construction l_q(L_p) built from a modular in
which each level contributes the smallest lam_nu with
rho_p(f_nu / lam_nu**(1/q)) <= 1. ``triebel_mixed_norm`` is the
integral-outside construction L_p(l_q).
"""

from __future__ import annotations

import math

import numpy as np

from ._scale import solve_decreasing, solve_unit_scale
from .luxemburg import (DEFAULT_TOL, Grid, GridFunction, _terms, luxemburg_norm_values,
                        modular_values)

__all__ = ["LevelSequence", "besov_mixed_modular", "besov_mixed_norm", "triebel_mixed_norm"]


class LevelSequence:
    """Levels f_0 .. f_N sharing one grid; stored as an array (N+1, cells)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        vals = np.array(values, dtype=float).reshape(-1, grid.size)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("level values must be finite and nonnegative")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals

    @classmethod
    def from_functions(cls, fs) -> "LevelSequence":
        fs = list(fs)
        if not fs:
            raise ValueError("need at least one level")
        grid = fs[0].grid
        if any(f.grid != grid for f in fs):
            raise ValueError("all levels must share box and grid level")
        return cls(grid, np.stack([f.values.ravel() for f in fs]))

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, nu) -> GridFunction:
        return GridFunction(self.grid, self.values[nu])

    def scaled(self, c: float) -> "LevelSequence":
        return LevelSequence(self.grid, self.values * c)


def _exponent_values(grid: Grid, p, q):
    pv = grid.sample(p).ravel()
    qv = grid.sample(q).ravel()
    if np.any(qv <= 0):
        raise ValueError("q must be positive")
    q_const = getattr(q, "constant", None)
    if np.isinf(qv).any() and not (q_const is not None and math.isinf(q_const)):
        raise ValueError("unbounded variable q is not supported; use q = inf as a constant")
    return pv, qv, q_const


def _power_form(values, pv, qv, vol, tol):
    """Per-level || f**q | L_{p/q} ||, one batched Luxemburg solve."""
    with np.errstate(divide="ignore"):
        powered = np.exp(qv * np.log(values))
    return luxemburg_norm_values(powered, pv / qv, vol, tol)


def _nested_level(f, pv, qv, vol, tol):
    """smallest lam with rho_p(f / lam**(1/q)) <= 1, by direct modular evaluation."""
    if not np.any(f > 0):
        return 0.0

    def rho(lam):
        return modular_values(f * lam ** (-1.0 / qv), pv, vol)[0]

    # start from the scale at which the largest cell alone is critical
    pos = f > 0
    fin = pos & ~np.isinf(pv)
    starts = []
    if fin.any():
        starts.append(np.max(qv[fin] * np.log(f[fin]) + qv[fin] / pv[fin] * math.log(vol)))
    if (pos & np.isinf(pv)).any():
        starts.append(np.max(qv[pos & np.isinf(pv)] * np.log(f[pos & np.isinf(pv)])))
    guess = math.exp(min(max(starts), 700.0))
    return solve_decreasing(rho, max(guess, 1e-300), tol)


def _level_terms(values, pv, qv, vol, tol, form):
    if form == "power":
        return _power_form(values, pv, qv, vol, tol)
    return np.array([_nested_level(f, pv, qv, vol, tol) for f in values])


def besov_mixed_modular(fs: LevelSequence, p, q, tol: float = DEFAULT_TOL,
                        form: str = "auto") -> float:
    """sum over levels of inf{lam : rho_p(f_nu / lam**(1/q)) <= 1}.

    ``form`` selects the evaluation: ``nested`` solves each infimum directly
    from the modular; ``power`` uses sum_nu || f_nu**q | L_{p/q} ||, which
    coincides with it whenever p is finite (or q = 1) on the grid. ``auto``
    uses ``power`` where that identity holds and ``nested`` otherwise.
    Returns ``inf`` (as a value) when q = inf and some rho_p(f_nu) > 1.
    """
    pv, qv, q_const = _exponent_values(fs.grid, p, q)
    vol = fs.grid.cell_volume
    if q_const is not None and math.isinf(q_const):
        rho = modular_values(fs.values, pv, vol)
        return 0.0 if np.all(rho <= 1.0) else math.inf
    if form == "auto":
        form = "power" if (not np.isinf(pv).any() or np.all(qv == 1.0)) else "nested"
    if form not in ("power", "nested"):
        raise ValueError(f"unknown form {form!r}")
    return float(_level_terms(fs.values, pv, qv, vol, tol, form).sum())


def besov_mixed_norm(fs: LevelSequence, p, q, tol: float = DEFAULT_TOL,
                     force_bisection: bool = False) -> float:
    """inf{mu > 0 : besov_mixed_modular(fs / mu) <= 1}.

    Constant q has the closed form (sum_nu ||f_nu|L_p||**q)**(1/q) (max for
    q = inf); ``force_bisection`` runs the general outer search anyway.
    """
    pv, qv, q_const = _exponent_values(fs.grid, p, q)
    vol = fs.grid.cell_volume
    if not np.any(fs.values > 0):
        return 0.0
    if q_const is not None and math.isinf(q_const):
        return float(luxemburg_norm_values(fs.values, pv, vol, tol).max())
    inner_tol = max(tol * 1e-2, 1e-14)
    if q_const is not None and not force_bisection:
        norms = luxemburg_norm_values(fs.values, pv, vol, inner_tol)
        top = norms.max()
        return float(top * np.sum((norms / top) ** q_const) ** (1.0 / q_const))

    form = "power" if (not np.isinf(pv).any() or np.all(qv == 1.0)) else "nested"
    levels = fs.values[np.any(fs.values > 0, axis=1)]

    def modular(mu):
        return _level_terms(levels / mu, pv, qv, vol, inner_tol, form).sum()

    guess = float(luxemburg_norm_values(levels, pv, vol, inner_tol).max())
    return solve_decreasing(modular, guess, tol)


def triebel_pointwise(fs: LevelSequence, q) -> np.ndarray:
    """(sum_nu f_nu(x)**q(x))**(1/q(x)) per cell; the max where q = inf."""
    qv = fs.grid.sample(q).ravel()
    vals = fs.values
    top = vals.max(axis=0)
    out = top.copy()
    fin = ~np.isinf(qv) & (top > 0)
    if fin.any():
        ratio = vals[:, fin] / top[fin]
        out[fin] = top[fin] * np.sum(ratio ** qv[fin], axis=0) ** (1.0 / qv[fin])
    return out


def triebel_mixed_norm(fs: LevelSequence, p, q, tol: float = DEFAULT_TOL) -> float:
    """|| (sum_nu |f_nu|**q)**(1/q) | L_p ||."""
    _exponent_values(fs.grid, p, q)
    g = triebel_pointwise(fs, q)
    return float(luxemburg_norm_values(g, fs.grid.sample(p).ravel(), fs.grid.cell_volume,
                                       tol)[0])
