"""Variable-exponent Lebesgue modular and Luxemburg norm on dyadic step functions.

Functions live on a box tiled by cubes of side 2**-L. Each cell carries one
nonnegative value and the exponent is sampled once at the cell midpoint, so
every integral is an exact finite sum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from ._scale import ConvergenceError, solve_unit_scale
from .exponents import normalize_box

__all__ = [
    "ConvergenceError",
    "Grid",
    "GridFunction",
    "InfinityRegion",
    "infinity_region",
    "lebesgue_modular",
    "luxemburg_norm",
    "luxemburg_norm_values",
    "modular_values",
    "read_grid_function",
    "write_grid_function",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Dyadic cells of side 2**-level tiling ``box``; corners must be dyadic."""

    box: tuple
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("grid level must be nonnegative")
        box = normalize_box(self.box)
        object.__setattr__(self, "box", box)
        scale = 2.0 ** self.level
        for lo, hi in box:
            if lo * scale != round(lo * scale) or hi * scale != round(hi * scale):
                raise ValueError(f"box corner not on the 2^-{self.level} lattice: {box}")

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple:
        s = 2 ** self.level
        return tuple(int(round((hi - lo) * s)) for lo, hi in self.box)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.level * self.n)

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell midpoints, row-major, shape (size, n)."""
        h = 2.0 ** -self.level
        axes = [lo + h * (np.arange(k) + 0.5) for (lo, _), k in zip(self.box, self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, g) -> np.ndarray:
        """Values of a point function at the cell midpoints, shaped like the grid."""
        return _sample(g, self)

    def refine(self, level: int) -> "Grid":
        return Grid(self.box, level)


@lru_cache(maxsize=512)
def _sample(g, grid: Grid) -> np.ndarray:
    if getattr(g, "constant", None) is not None:
        out = np.full(grid.shape, float(g.constant))
    else:
        out = np.asarray(g(grid.centers), dtype=float).reshape(grid.shape)
    out.setflags(write=False)
    return out


class GridFunction:
    """A nonnegative step function on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        vals = np.array(values, dtype=float).reshape(grid.shape)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("grid function values must be finite and nonnegative")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridFunction":
        """Sample ``fn`` (points -> values) at the cell midpoints."""
        return cls(grid, np.asarray(fn(grid.centers), dtype=float))

    @classmethod
    def indicator(cls, grid: Grid, lower, upper, value: float = 1.0) -> "GridFunction":
        """``value`` on the cells whose midpoints lie in the box [lower, upper)."""
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (grid.n,))
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (grid.n,))
        c = grid.centers
        inside = np.all((c >= lo) & (c < hi), axis=1)
        return cls(grid, np.where(inside, value, 0.0))

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return GridFunction(self.grid, self.values + other.values)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def __repr__(self):
        return f"GridFunction(level={self.grid.level}, box={self.grid.box})"


@dataclass(frozen=True)
class InfinityRegion:
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.grid.shape:
            raise ValueError("mask shape does not match the grid")


def infinity_region(p, grid: Grid) -> InfinityRegion:
    """Cells whose midpoint exponent is infinite."""
    return InfinityRegion(grid, np.isinf(grid.sample(p)))


def _terms(values: np.ndarray, pvals: np.ndarray, vol: float):
    """Split into log-coefficients of the power terms and of the sup terms."""
    values = np.atleast_2d(values)
    pvals = np.broadcast_to(pvals, values.shape)
    inf_mask = np.isinf(pvals)
    with np.errstate(divide="ignore"):
        logf = np.log(values)
    pfin = np.where(inf_mask, 1.0, pvals)
    log_a = np.where(inf_mask | (values == 0), -np.inf, pfin * logf + math.log(vol))
    log_b = None
    if inf_mask.any():
        log_b = np.where(inf_mask & (values > 0), logf, -np.inf)
    return log_a, pfin, log_b


def modular_values(values, pvals, vol: float) -> np.ndarray:
    """Row-wise modular of cell values ``values`` (rows, cells); 0**p = 0."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    pvals = np.broadcast_to(np.asarray(pvals, dtype=float), values.shape)
    fin = ~np.isinf(pvals)
    with np.errstate(divide="ignore", over="ignore"):
        powered = np.where(fin & (values > 0), np.exp(np.where(fin, pvals, 1.0) * np.log(
            np.where(values > 0, values, 1.0))), 0.0)
    total = powered.sum(axis=1) * vol
    if (~fin).any():
        total = total + np.where(~fin, values, 0.0).max(axis=1)
    return total


def luxemburg_norm_values(values, pvals, vol: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Row-wise Luxemburg norms; ``pvals`` broadcasts against ``values``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    pvals = np.broadcast_to(np.asarray(pvals, dtype=float), values.shape)
    log_a, expo, log_b = _terms(values, pvals, vol)
    return solve_unit_scale(log_a, expo, log_b, None if log_b is None else 1.0, tol=tol)


def lebesgue_modular(f: GridFunction, p) -> float:
    """sum over finite-exponent cells of f**p * vol, plus max f over p = inf cells."""
    pv = f.grid.sample(p)
    return float(modular_values(f.values.ravel(), pv.ravel(), f.grid.cell_volume)[0])


def luxemburg_norm(f: GridFunction, p, tol: float = DEFAULT_TOL) -> float:
    """inf{lam > 0 : rho(f/lam) <= 1}; returns 0 for f = 0.

    The result satisfies rho(f/result) <= 1 and rho(f/(result*(1-tol))) > 1.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    pv = f.grid.sample(p)
    return float(luxemburg_norm_values(f.values.ravel(), pv.ravel(), f.grid.cell_volume, tol)[0])


def write_grid_function(path, f: GridFunction) -> None:
    """CSV rows: ``level,L``; ``box,lo1,hi1,...``; ``values,v1,...`` (row-major)."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", f.grid.level])
        w.writerow(["box"] + [repr(v) for pair in f.grid.box for v in pair])
        w.writerow(["values"] + [repr(float(v)) for v in f.values.ravel()])


def read_grid_function(path) -> GridFunction:
    with open(Path(path), newline="") as fh:
        rows = {r[0]: r[1:] for r in csv.reader(fh) if r}
    try:
        level = int(rows["level"][0])
        flat = [float(v) for v in rows["box"]]
        values = [float(v) for v in rows["values"]]
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"malformed grid function file {path}: {exc}") from exc
    box = tuple(zip(flat[0::2], flat[1::2]))
    return GridFunction(Grid(box, level), values)
