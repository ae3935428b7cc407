"""Non-increasing rearrangements of step functions and coefficient rows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .luxemburg import GridFunction

__all__ = [
    "NonIncreasingProfile",
    "RowRearrangement",
    "SubadditivityReport",
    "check_subadditivity",
    "grid_lp_norm",
    "rearrange_grid",
    "rearrange_row",
]


@dataclass(frozen=True)
class NonIncreasingProfile:
    """h* as (value, measure) steps with strictly decreasing positive values.

    h*(t) = values[i] for t in [c_{i-1}, c_i) where c are the cumulative
    measures; h* vanishes beyond the last step. ``total_measure`` is the
    measure of the ambient box.
    """

    values: np.ndarray
    measures: np.ndarray
    total_measure: float

    def __post_init__(self):
        if len(self.values) != len(self.measures):
            raise ValueError("values and measures differ in length")
        if np.any(np.diff(self.values) >= 0) or np.any(self.values <= 0):
            raise ValueError("profile values must be positive and strictly decreasing")
        if np.any(self.measures <= 0):
            raise ValueError("profile measures must be positive")

    @property
    def breakpoints(self) -> np.ndarray:
        return np.cumsum(self.measures)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t, side="right")
        padded = np.append(self.values, 0.0)
        return padded[np.minimum(idx, len(self.values))]

    def lp_norm(self, p: float) -> float:
        if len(self.values) == 0:
            return 0.0
        if math.isinf(p):
            return float(self.values[0])
        top = self.values[0]
        return float(top * np.sum((self.values / top) ** p * self.measures) ** (1.0 / p))

    def distribution(self, lam: float) -> float:
        """mu{t : h*(t) > lam}."""
        return float(self.measures[self.values > lam].sum())

    def pairs(self) -> list:
        return list(zip(self.values.tolist(), self.measures.tolist()))

    def plot_rows(self) -> list:
        """(t, value) rows tracing the step function, ending at value 0."""
        rows = []
        t = 0.0
        for v, m in zip(self.values, self.measures):
            rows.append((t, float(v)))
            t += float(m)
        rows.append((t, 0.0))
        return rows


def _profile(cell_values: np.ndarray, cell_measure: float, total: float) -> NonIncreasingProfile:
    v = cell_values[cell_values > 0]
    uniq, counts = np.unique(v, return_counts=True)
    return NonIncreasingProfile(uniq[::-1].copy(), counts[::-1] * cell_measure, total)


def rearrange_grid(f: GridFunction) -> NonIncreasingProfile:
    """Sort the cell values descending and merge ties; each cell has measure 2**(-L n)."""
    vol = f.grid.cell_volume
    return _profile(f.values.ravel(), vol, f.grid.size * vol)


@dataclass(frozen=True)
class RowRearrangement:
    """gamma*_{j,l}: row j sorted descending (zeros last); step l covers
    [2**(-jn) l, 2**(-jn) (l+1))."""

    j: int
    n: int
    values: np.ndarray

    @property
    def step(self) -> float:
        return 2.0 ** (-self.j * self.n)

    def __getitem__(self, l):
        l = np.asarray(l)
        padded = np.append(self.values, 0.0)
        return padded[np.minimum(l, len(self.values))]

    def profile(self) -> NonIncreasingProfile:
        return _profile(self.values, self.step, len(self.values) * self.step)


def rearrange_row(gamma, j: int) -> RowRearrangement:
    if not 0 <= j <= gamma.J_max:
        raise ValueError(f"level {j} not present (J_max = {gamma.J_max})")
    row = np.sort(gamma.row(j))[::-1].copy()
    return RowRearrangement(j, gamma.n, row)


def grid_lp_norm(f: GridFunction, p: float) -> float:
    """Classical L_p norm (p > 0 or inf) of a step function, summed cell by cell."""
    v = f.values.ravel()
    if math.isinf(p):
        return float(v.max(initial=0.0))
    top = v.max(initial=0.0)
    if top == 0:
        return 0.0
    return float(top * (np.sum((v / top) ** p) * f.grid.cell_volume) ** (1.0 / p))


def sum_profile_norm(a: NonIncreasingProfile, b: NonIncreasingProfile, p: float) -> float:
    """|| a + b | L_p(0, inf) || for two rearrangements, by merging breakpoints."""
    if math.isinf(p):
        return a.lp_norm(p) + b.lp_norm(p)
    edges = np.union1d(a.breakpoints, b.breakpoints)
    if len(edges) == 0:
        return 0.0
    left = np.concatenate([[0.0], edges[:-1]])
    vals = a(left) + b(left)
    widths = edges - left
    top = vals.max()
    return float(top * np.sum((vals / top) ** p * widths) ** (1.0 / p))


@dataclass
class SubadditivityReport:
    lhs: float
    rhs: float
    margin: float
    holds: bool


def check_subadditivity(h1: GridFunction, h2: GridFunction, p: float,
                        atol: float = 1e-12) -> SubadditivityReport:
    """Compare ||h1 + h2||_p with ||h1* + h2*||_{L_p(0, inf)} for p >= 1.

    ``holds`` accepts a margin down to -atol * max(1, rhs) to absorb rounding.
    """
    if not p >= 1:
        raise ValueError("subadditivity of rearrangements needs p >= 1")
    if h1.grid != h2.grid:
        raise ValueError("grid mismatch")
    lhs = grid_lp_norm(h1 + h2, p)
    rhs = sum_profile_norm(rearrange_grid(h1), rearrange_grid(h2), p)
    margin = rhs - lhs
    return SubadditivityReport(lhs, rhs, margin, margin >= -atol * max(1.0, rhs))
