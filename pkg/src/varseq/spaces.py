"""Truncated dyadic coefficient fields and the sequence-space norms b and f.

Cubes are corner-anchored, Q_{j,m} = 2**-j (m + [0,1)**n), so the cubes of
one level tile the box exactly and nest inside every finer grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .exponents import (ExponentFunction, SmoothnessFunction, box_nodes, constant_exponent,
                        constant_smoothness, estimate_log_holder, normalize_box)
from .luxemburg import DEFAULT_TOL, Grid, GridFunction
from .mixed import LevelSequence, besov_mixed_norm, triebel_mixed_norm

__all__ = [
    "CoefficientField",
    "SpaceSpec",
    "WeightReport",
    "WeightSequence",
    "default_box",
    "read_coefficients",
    "space_norm",
    "synthesize_level",
    "validate_weights",
    "weights_from_smoothness",
    "write_coefficients",
]


def default_box(n: int) -> tuple:
    return tuple((-2.0, 2.0) for _ in range(n))


class CoefficientField:
    """Nonnegative coefficients gamma_{j,m} for j <= J_max on an integer box.

    Level j is a dense array indexed by m - 2**j * box_lo, covering every
    cube of that level inside the box.
    """

    __slots__ = ("n", "J_max", "box", "levels")

    def __init__(self, n: int, J_max: int, box=None, levels=None):
        if J_max < 0:
            raise ValueError("J_max must be nonnegative")
        box = normalize_box(default_box(n) if box is None else box, n)
        if len(box) != n:
            raise ValueError("box dimension mismatch")
        if any(lo != round(lo) or hi != round(hi) for lo, hi in box):
            raise ValueError("coefficient boxes need integer corners")
        self.n, self.J_max, self.box = n, J_max, box
        if levels is None:
            levels = [np.zeros(self.level_shape(j)) for j in range(J_max + 1)]
        if len(levels) != J_max + 1:
            raise ValueError("need one array per level")
        arrs = []
        for j, a in enumerate(levels):
            a = np.array(a, dtype=float)
            if a.shape != self.level_shape(j):
                raise ValueError(f"level {j} has shape {a.shape}, expected {self.level_shape(j)}")
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise ValueError("coefficients must be finite and nonnegative")
            a.setflags(write=False)
            arrs.append(a)
        self.levels = tuple(arrs)

    def level_shape(self, j: int) -> tuple:
        return tuple(int(round(hi - lo)) << j for lo, hi in self.box)

    def offset(self, j: int) -> np.ndarray:
        return np.array([int(round(lo)) << j for lo, _ in self.box])

    @classmethod
    def from_entries(cls, entries, n: int, J_max: int | None = None, box=None):
        """Build from ``{(j, m): value}`` or an iterable of (j, m, value)."""
        if isinstance(entries, dict):
            items = list(entries.items())
        else:
            items = [((e[0], e[1]), e[2]) for e in entries]
        if J_max is None:
            J_max = max((jm[0] for jm, _ in items), default=0)
        fld = cls(n, J_max, box)
        levels = [a.copy() for a in fld.levels]
        for (j, m), v in items:
            idx = tuple(np.atleast_1d(np.asarray(m, dtype=int)) - fld.offset(j))
            if j > J_max or j < 0:
                raise ValueError(f"level {j} outside 0..{J_max}")
            if any(i < 0 or i >= s for i, s in zip(idx, levels[j].shape)):
                raise ValueError(f"cube ({j}, {m}) lies outside the box {fld.box}")
            levels[j][idx] = abs(float(v))
        return cls(n, J_max, fld.box, levels)

    def entries(self):
        """Nonzero coefficients as (j, m tuple, value), in level then row-major order."""
        for j, a in enumerate(self.levels):
            off = self.offset(j)
            for idx in zip(*np.nonzero(a)):
                yield j, tuple(int(i) for i in np.asarray(idx) + off), float(a[idx])

    def row(self, j: int) -> np.ndarray:
        return self.levels[j].ravel()

    def scaled(self, c: float) -> "CoefficientField":
        return CoefficientField(self.n, self.J_max, self.box, [a * c for a in self.levels])

    def is_zero(self) -> bool:
        return not any(np.any(a > 0) for a in self.levels)

    def top_level(self) -> int:
        """Largest level carrying a nonzero coefficient (0 for the zero field)."""
        nz = [j for j, a in enumerate(self.levels) if np.any(a > 0)]
        return max(nz) if nz else 0

    def __repr__(self):
        return f"CoefficientField(n={self.n}, J_max={self.J_max}, nnz={sum(int(np.count_nonzero(a)) for a in self.levels)})"


def write_coefficients(path, gamma: CoefficientField) -> None:
    """CSV: header ``n,J_max`` and its values, then ``j,m1..mn,value`` rows."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "J_max"])
        w.writerow([gamma.n, gamma.J_max])
        w.writerow(["j"] + [f"m{i + 1}" for i in range(gamma.n)] + ["value"])
        for j, m, v in gamma.entries():
            w.writerow([j, *m, repr(v)])


def read_coefficients(path, box=None) -> CoefficientField:
    with open(Path(path), newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        n, J_max = int(rows[1][0]), int(rows[1][1])
        entries = {(int(r[0]), tuple(int(v) for v in r[1:1 + n])): float(r[1 + n])
                   for r in rows[3:]}
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed coefficient file {path}: {exc}") from exc
    return CoefficientField.from_entries(entries, n, J_max, box)


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Weights w_0 .. w_J with declared class parameters (alpha, alpha1, alpha2)."""

    functions: tuple
    alpha: float
    alpha1: float
    alpha2: float
    provenance: str = "explicit"
    smoothness: Optional[SmoothnessFunction] = None
    dim: int = 1

    @property
    def J_max(self) -> int:
        return len(self.functions) - 1

    def __call__(self, j: int, x) -> np.ndarray:
        from .exponents import as_points
        return np.asarray(self.functions[j](as_points(x, self.dim)), dtype=float).ravel()

    def sample(self, j: int, grid: Grid) -> np.ndarray:
        if self.smoothness is not None:
            return np.exp2(j * grid.sample(self.smoothness).ravel())
        return self(j, grid.centers)

    @classmethod
    def explicit(cls, functions: Sequence[Callable], alpha: float, alpha1: float,
                 alpha2: float, dim: int = 1) -> "WeightSequence":
        return cls(tuple(functions), alpha, alpha1, alpha2, "explicit", None, dim)


def weights_from_smoothness(s: SmoothnessFunction, J_max: int, box=None) -> WeightSequence:
    """w_j(x) = 2**(j s(x)) with alpha1 = s^-, alpha2 = s^+, alpha = c_log(s)."""
    box = default_box(s.dim) if box is None else box
    alpha = 0.0 if s.is_constant else estimate_log_holder(s, box).c_loc
    ev = s.evaluator if not s.is_constant else (lambda x, v=s.constant: np.full(len(x), v))
    funcs = tuple((lambda x, j=j: np.exp2(j * ev(x))) for j in range(J_max + 1))
    return WeightSequence(funcs, alpha, s.inf, s.sup, "from_smoothness", s, s.dim)


@dataclass
class WeightReport:
    c_estimate: float
    c_bound: Optional[float]
    local_ratio: float
    violations: list = field(default_factory=list)

    @property
    def passes(self) -> bool:
        ok = not self.violations
        if self.c_bound is not None:
            ok = ok and self.c_estimate <= self.c_bound * (1 + 1e-9)
        return ok


def validate_weights(w: WeightSequence, box=None, samples: int = 257,
                     rel_slack: float = 1e-12) -> WeightReport:
    """Check the admissibility conditions of a weight sequence on sampled points.

    The doubling constant c in w_j(x) <= c w_j(y) (1 + 2**j |x-y|)**alpha is
    maximized over all node pairs plus short axis offsets at scale 2**-j; the
    level growth 2**alpha1 <= w_{j+1}/w_j <= 2**alpha2 is checked at every
    node. For weights built from a smoothness function, c_bound = e**alpha is
    the constant implied by the log-Hoelder estimate.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    n = w.dim
    box = normalize_box(default_box(n) if box is None else box, n)
    per_axis = samples if n == 1 else max(3, int(round(samples ** (1.0 / n))))
    nodes = box_nodes(box, per_axis)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    violations = []
    c_est, local = 1.0, 1.0
    vals = [w(j, nodes) for j in range(w.J_max + 1)]
    for j in range(w.J_max + 1):
        v = vals[j]
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            violations.append(("positivity", j, None))
            continue
        d = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=2)
        ratio = v[:, None] / v[None, :] / (1.0 + 2.0 ** j * d) ** w.alpha
        c_est = max(c_est, float(ratio.max()))
        near = d <= 2.0 ** -j
        local = max(local, float((v[:, None] / v[None, :])[near].max()))
        for t in (0.25, 0.5, 1.0, 2.0):
            for ax in range(n):
                shift = np.zeros(n)
                shift[ax] = t * 2.0 ** -j
                ok = np.all(nodes + shift <= hi, axis=1)
                if not ok.any():
                    continue
                a, b = v[ok], w(j, nodes[ok] + shift)
                dist = t * 2.0 ** -j
                for x_over_y in (a / b, b / a):
                    c_est = max(c_est, float(np.max(x_over_y / (1.0 + 2.0 ** j * dist) ** w.alpha)))
                    if t <= 1.0:
                        local = max(local, float(np.max(x_over_y)))
    for j in range(w.J_max):
        r = vals[j + 1] / vals[j]
        low = r < 2.0 ** w.alpha1 * (1 - rel_slack)
        high = r > 2.0 ** w.alpha2 * (1 + rel_slack)
        for i in np.flatnonzero(low | high):
            violations.append(("level_growth", j, tuple(nodes[i])))
    bound = math.exp(w.alpha) if w.provenance == "from_smoothness" else None
    return WeightReport(c_est, bound, local, violations)


# --------------------------------------------------------------------------
# spaces and norms
# --------------------------------------------------------------------------


def _as_exponent(v, n):
    return v if isinstance(v, ExponentFunction) else constant_exponent(float(v), n)


def _as_smoothness(v, n):
    return v if isinstance(v, SmoothnessFunction) else constant_smoothness(float(v), n)


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    """A sequence space: kind (besov | triebel), p, q and either s or a weight."""

    kind: str
    p: ExponentFunction
    q: ExponentFunction
    s: Optional[SmoothnessFunction] = None
    weight: Optional[WeightSequence] = None

    def __post_init__(self):
        if self.kind not in ("besov", "triebel"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if (self.s is None) == (self.weight is None):
            raise ValueError("give exactly one of s and weight")
        if self.kind == "triebel" and math.isinf(self.p.sup):
            raise ValueError("triebel spaces need p^+ < inf")
        if math.isinf(self.q.sup) and not (self.q.is_constant):
            raise ValueError("variable q must satisfy q^+ < inf; q = inf only as a constant")

    @property
    def n(self) -> int:
        return self.p.dim

    @classmethod
    def besov(cls, p, q, s, n: int = 1) -> "SpaceSpec":
        return cls("besov", _as_exponent(p, n), _as_exponent(q, n), _as_smoothness(s, n))

    @classmethod
    def triebel(cls, p, q, s, n: int = 1) -> "SpaceSpec":
        return cls("triebel", _as_exponent(p, n), _as_exponent(q, n), _as_smoothness(s, n))

    def with_weight(self, w: WeightSequence) -> "SpaceSpec":
        return SpaceSpec(self.kind, self.p, self.q, None, w)

    def is_constant(self) -> bool:
        return (self.p.is_constant and self.q.is_constant and self.s is not None
                and self.s.is_constant)

    def describe(self) -> str:
        def fmt(g):
            if g is None:
                return "w"
            return repr(g.constant) if g.is_constant else (g.family or "variable")
        return f"{self.kind[0]}^{{{fmt(self.s)}}}_{{{fmt(self.p)},{fmt(self.q)}}}"


def _weight_values(spec: SpaceSpec, j: int, grid: Grid) -> np.ndarray:
    if spec.weight is not None:
        if j > spec.weight.J_max:
            raise ValueError(f"weight sequence stops at level {spec.weight.J_max}")
        return spec.weight.sample(j, grid)
    return np.exp2(j * grid.sample(spec.s).ravel())


def _spread(row: np.ndarray, factor: int) -> np.ndarray:
    out = row
    for ax in range(row.ndim):
        out = np.repeat(out, factor, axis=ax)
    return out


def synthesize_level(gamma: CoefficientField, j: int, w, L: int) -> GridFunction:
    """x -> sum_m gamma_{j,m} w_j(x) chi_{j,m}(x) on the level-L grid of the field box.

    ``w`` is a WeightSequence, a SmoothnessFunction (w_j = 2**(j s)), or None
    for unit weights.
    """
    if L < j:
        raise ValueError(f"grid level {L} is coarser than coefficient level {j}")
    grid = Grid(gamma.box, L)
    base = _spread(gamma.levels[j], 1 << (L - j)).ravel()
    if w is None:
        return GridFunction(grid, base)
    if isinstance(w, WeightSequence):
        wv = w.sample(j, grid)
    else:
        wv = np.exp2(j * grid.sample(w).ravel())
    return GridFunction(grid, base * wv)


def _levels(gamma: CoefficientField, spec: SpaceSpec, L: int) -> LevelSequence:
    grid = Grid(gamma.box, L)
    rows = np.empty((gamma.J_max + 1, grid.size))
    for j in range(gamma.J_max + 1):
        rows[j] = _spread(gamma.levels[j], 1 << (L - j)).ravel()
        if np.any(rows[j] > 0):
            rows[j] *= _weight_values(spec, j, grid)
    return LevelSequence(grid, rows)


def _closed_form_besov(gamma: CoefficientField, spec: SpaceSpec) -> float:
    p, q, s, n = spec.p.constant, spec.q.constant, spec.s.constant, gamma.n
    per = np.zeros(gamma.J_max + 1)
    for j, a in enumerate(gamma.levels):
        if not np.any(a > 0):
            continue
        top = a.max()
        if math.isinf(p):
            per[j] = top
        else:
            per[j] = top * (np.sum((a / top) ** p) * 2.0 ** (-j * n)) ** (1.0 / p)
        per[j] *= 2.0 ** (j * s)
    top = per.max()
    if top == 0:
        return 0.0
    if math.isinf(q):
        return float(top)
    return float(top * np.sum((per / top) ** q) ** (1.0 / q))


def default_grid_level(gamma: CoefficientField, spec: SpaceSpec) -> int:
    return gamma.J_max if spec.is_constant() else gamma.J_max + 2


def level_sequence(gamma: CoefficientField, spec: SpaceSpec, L: int | None = None) -> LevelSequence:
    """The weighted levels sum_m gamma_{j,m} w_j chi_{j,m} on the level-L grid."""
    return _levels(gamma, spec, default_grid_level(gamma, spec) if L is None else L)


def space_norm(gamma: CoefficientField, spec: SpaceSpec, L: int | None = None,
               tol: float = DEFAULT_TOL, method: str = "auto") -> float:
    """Norm of gamma in the b- or f-space described by ``spec``.

    ``method="auto"`` evaluates constant-exponent b-norms in closed form and
    everything else on the level-L grid (default L = J_max for constant
    exponents, J_max + 2 otherwise); ``method="grid"`` always uses the grid.
    """
    if spec.n != gamma.n:
        raise ValueError("dimension mismatch between field and space")
    if L is None:
        L = default_grid_level(gamma, spec)
    if L < gamma.J_max:
        raise ValueError(f"grid level {L} is below J_max = {gamma.J_max}")
    if method not in ("auto", "grid"):
        raise ValueError(f"unknown method {method!r}")
    if gamma.is_zero():
        return 0.0
    if method == "auto" and spec.kind == "besov" and spec.is_constant():
        return _closed_form_besov(gamma, spec)
    fs = _levels(gamma, spec, L)
    if spec.kind == "besov":
        return besov_mixed_norm(fs, spec.p, spec.q, tol)
    return triebel_mixed_norm(fs, spec.p, spec.q, tol)
