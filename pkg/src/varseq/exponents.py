"""Variable exponents p(.), q(.) and smoothness functions s(.).

Exponents are kept as evaluable functions; discretization happens only when a
norm is computed, so a single exponent serves every grid resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

Evaluator = Callable[[np.ndarray], np.ndarray]

FAMILIES = ("constant", "log_perturbed", "sigmoid_step", "bump", "log_borderline")


def as_points(x, dim: int) -> np.ndarray:
    """Coerce ``x`` to an array of points with shape ``(k, dim)``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr.reshape(-1, dim)


@dataclass(frozen=True, eq=False)
class _PointFunction:
    evaluator: Evaluator
    inf: float
    sup: float
    dim: int = 1
    limit: Optional[float] = None
    constant: Optional[float] = None
    family: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        scalar = np.ndim(x) == 0 or (np.ndim(x) == 1 and self.dim > 1)
        pts = as_points(x, self.dim)
        if self.constant is not None:
            out = np.full(len(pts), float(self.constant))
        else:
            out = np.asarray(self.evaluator(pts), dtype=float).reshape(len(pts))
        return float(out[0]) if scalar else out

    @property
    def is_constant(self) -> bool:
        return self.constant is not None


@dataclass(frozen=True, eq=False)
class ExponentFunction(_PointFunction):
    """An exponent p: R^n -> (c, inf] with declared bounds p^- and p^+.

    ``inf`` and ``sup`` are the declared ess-inf and ess-sup; ``limit`` is the
    value p_inf at infinity when the exponent has one.
    """

    def __post_init__(self):
        if not self.inf > 0:
            raise ValueError(f"exponent must satisfy p^- > 0, got {self.inf}")
        if self.sup < self.inf:
            raise ValueError("declared sup below declared inf")

    def reciprocal(self) -> "SmoothnessFunction":
        """1/p as a real function (1/inf = 0); log-Hoelder classes are checked on it."""
        ev = self.evaluator
        return SmoothnessFunction(
            lambda x: 1.0 / ev(x),
            inf=1.0 / self.sup,
            sup=1.0 / self.inf,
            dim=self.dim,
            limit=None if self.limit is None else 1.0 / self.limit,
            constant=None if self.constant is None else 1.0 / self.constant,
        )

    def scaled(self, factor: float) -> "ExponentFunction":
        """The exponent ``factor * p``."""
        if factor <= 0:
            raise ValueError("scaling factor must be positive")
        ev = self.evaluator
        return ExponentFunction(
            lambda x: factor * ev(x),
            inf=factor * self.inf,
            sup=factor * self.sup,
            dim=self.dim,
            limit=None if self.limit is None else factor * self.limit,
            constant=None if self.constant is None else factor * self.constant,
        )


@dataclass(frozen=True, eq=False)
class SmoothnessFunction(_PointFunction):
    """A real smoothness function s(.) with declared bounds s^- <= s <= s^+."""

    def __post_init__(self):
        if self.sup < self.inf:
            raise ValueError("declared sup below declared inf")


@dataclass
class LogHolderReport:
    c_loc: float
    c_inf: Optional[float]
    g_inf: Optional[float]
    witness_pairs: list = field(default_factory=list)


def eval_exponent(g: _PointFunction, x) -> float | np.ndarray:
    return g(x)


# --------------------------------------------------------------------------
# standard families
# --------------------------------------------------------------------------


def _radius(x: np.ndarray, center) -> np.ndarray:
    c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[1],))
    return np.linalg.norm(x - c, axis=1)


def _family(family: str, params: dict, dim: int):
    """Return (evaluator, inf, sup, limit, constant, radial_profile).

    ``radial_profile`` is G(r) for families depending on |x - center| only
    (None otherwise); it drives the exact pair reduction in
    :func:`analytic_log_holder`.
    """
    p = dict(params)
    if family == "constant":
        v = float(p["value"])
        return (lambda x: np.full(len(x), v)), v, v, v, v, None
    center = p.get("center", 0.0)
    if family == "log_perturbed":
        base, amp = float(p["base"]), float(p.get("amplitude", 1.0))

        def G(r):
            return amp / np.log(np.e + r)

        lo, hi = sorted((base, base + amp))
        return (lambda x: base + G(_radius(x, center))), lo, hi, base, None, G
    if family == "log_borderline":
        base, amp = float(p.get("base", 0.0)), float(p.get("amplitude", 1.0))

        def G(r):
            r = np.asarray(r, dtype=float)
            with np.errstate(divide="ignore"):
                out = amp / np.log(np.e + 1.0 / r)
            return np.where(r == 0, 0.0, out)

        lo, hi = sorted((base, base + amp))
        return (lambda x: base + G(_radius(x, center))), lo, hi, base + amp, None, G
    if family == "bump":
        base, amp = float(p["base"]), float(p.get("amplitude", 1.0))
        radius = float(p.get("radius", 1.0))
        if radius <= 0:
            raise ValueError("bump radius must be positive")

        def G(r):
            return amp * np.maximum(0.0, 1.0 - np.asarray(r) / radius)

        lo, hi = sorted((base, base + amp))
        return (lambda x: base + G(_radius(x, center))), lo, hi, base, None, G
    if family == "sigmoid_step":
        low, high = float(p["low"]), float(p["high"])
        width = float(p.get("width", 1.0))
        axis = int(p.get("axis", 0))
        c = float(np.ravel([center])[0])
        if width <= 0:
            raise ValueError("sigmoid width must be positive")

        def ev(x):
            t = (x[:, axis] - c) / width
            return low + (high - low) * 0.5 * (1.0 + np.tanh(0.5 * t))

        return ev, min(low, high), max(low, high), None, None, None
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def make_standard_exponent(family: str, params: dict, dim: int = 1) -> ExponentFunction:
    """Build a test exponent with analytically known p^-, p^+ and finite c_log.

    Families: ``constant`` (value), ``log_perturbed`` (base, amplitude:
    base + amplitude/log(e+|x|)), ``sigmoid_step`` (low, high, width),
    ``bump`` (base, amplitude, radius; a radial hat), ``log_borderline``
    (base, amplitude: base + amplitude/log(e+1/|x|)).
    """
    ev, lo, hi, limit, const, _ = _family(family, params, dim)
    if not lo > 0:
        raise ValueError(f"{family} parameters give p^- = {lo} <= 0")
    return ExponentFunction(ev, inf=lo, sup=hi, dim=dim, limit=limit,
                            constant=const, family=family, params=dict(params))


def make_standard_smoothness(family: str, params: dict, dim: int = 1) -> SmoothnessFunction:
    ev, lo, hi, limit, const, _ = _family(family, params, dim)
    return SmoothnessFunction(ev, inf=lo, sup=hi, dim=dim, limit=limit,
                              constant=const, family=family, params=dict(params))


def constant_exponent(value: float, dim: int = 1) -> ExponentFunction:
    return make_standard_exponent("constant", {"value": value}, dim)


def constant_smoothness(value: float, dim: int = 1) -> SmoothnessFunction:
    return make_standard_smoothness("constant", {"value": value}, dim)


def step_exponent(edges: Sequence[float], values: Sequence[float], dim: int = 1,
                  axis: int = 0) -> ExponentFunction:
    """Piecewise-constant exponent along one axis; ``inf`` values mark p = inf.

    ``values[i]`` holds on [edges[i-1], edges[i]) with edges[-1] = -inf and
    edges[len] = +inf implied, so len(values) == len(edges) + 1.
    """
    edges = np.asarray(edges, dtype=float)
    vals = np.asarray(values, dtype=float)
    if len(vals) != len(edges) + 1:
        raise ValueError("need len(values) == len(edges) + 1")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("edges must increase")

    def ev(x):
        return vals[np.searchsorted(edges, x[:, axis], side="right")]

    const = float(vals[0]) if np.all(vals == vals[0]) else None
    return ExponentFunction(ev, inf=float(vals.min()), sup=float(vals.max()), dim=dim,
                            constant=const, family="step",
                            params={"edges": edges.tolist(), "values": vals.tolist()})


def conjugate_smoothness(s0: SmoothnessFunction, p0: ExponentFunction,
                         p1: ExponentFunction) -> SmoothnessFunction:
    """s1 = s0 - n/p0 + n/p1, the smoothness matching s0 under Sobolev conjugacy."""
    n = s0.dim
    if not (p0.dim == p1.dim == n):
        raise ValueError("dimension mismatch")
    e0, e1, es = p0.evaluator, p1.evaluator, s0.evaluator

    def ev(x):
        with np.errstate(divide="raise"):
            return es(x) - n / e0(x) + n / e1(x)

    const = None
    if s0.is_constant and p0.is_constant and p1.is_constant:
        const = s0.constant - n / p0.constant + n / p1.constant
    limit = None
    if None not in (s0.limit, p0.limit, p1.limit):
        limit = s0.limit - n / p0.limit + n / p1.limit
    return SmoothnessFunction(
        ev,
        inf=s0.inf - n / p0.inf + n / p1.sup,
        sup=s0.sup - n / p0.sup + n / p1.inf,
        dim=n,
        limit=limit,
        constant=const,
        family="conjugate",
    )


def conjugate_exponent(p0: ExponentFunction, s0: SmoothnessFunction,
                       s1: SmoothnessFunction) -> ExponentFunction:
    """p1 with n/p1 = n/p0 - (s0 - s1); requires s0 - s1 < n/p0 pointwise."""
    n = p0.dim
    e0, a, b = p0.evaluator, s0.evaluator, s1.evaluator

    def ev(x):
        r = 1.0 / e0(x) - (a(x) - b(x)) / n
        if np.any(r <= 0):
            raise ValueError("smoothness gap exceeds n/p0: conjugate exponent undefined")
        return 1.0 / r

    r_lo = 1.0 / p0.sup - (s0.sup - s1.inf) / n
    r_hi = 1.0 / p0.inf - (s0.inf - s1.sup) / n
    const = None
    if p0.is_constant and s0.is_constant and s1.is_constant:
        const = 1.0 / (1.0 / p0.constant - (s0.constant - s1.constant) / n)
    # declared bounds are interval-arithmetic enclosures
    sup = math.inf if r_lo <= 0 else 1.0 / r_lo
    return ExponentFunction(ev, inf=1.0 / r_hi, sup=sup, dim=n,
                            constant=const, family="conjugate")


def shifted_smoothness(s: SmoothnessFunction, shift: Callable[[np.ndarray], np.ndarray],
                       lo: float, hi: float) -> SmoothnessFunction:
    """s + shift, with ``lo <= shift <= hi`` declared by the caller."""
    es = s.evaluator
    return SmoothnessFunction(lambda x: es(x) + shift(x), inf=s.inf + lo,
                              sup=s.sup + hi, dim=s.dim)


# --------------------------------------------------------------------------
# sampling helpers
# --------------------------------------------------------------------------


def box_nodes(box: Sequence[Sequence[float]], per_axis: int) -> np.ndarray:
    """Tensor grid of ``per_axis`` equispaced nodes per axis (endpoints included)."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def normalize_box(box, dim: int | None = None) -> tuple:
    b = np.asarray(box, dtype=float)
    if b.ndim == 1:
        b = b.reshape(1, 2)
    if dim is not None and b.shape[0] == 1 and dim > 1:
        b = np.repeat(b, dim, axis=0)
    if b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]):
        raise ValueError(f"invalid box {box!r}")
    return tuple((float(lo), float(hi)) for lo, hi in b)


def separation_inf(a: SmoothnessFunction, b: SmoothnessFunction, box,
                   samples: int = 1025) -> float:
    """min over a node grid of a(x) - b(x)."""
    return separation_witness(a, b, box, samples)[0]


def separation_witness(a, b, box, samples: int = 1025):
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    box = normalize_box(box, a.dim)
    if a.is_constant and b.is_constant:
        return a.constant - b.constant, np.array([lo for lo, _ in box])
    per_axis = samples if a.dim == 1 else max(3, int(round(samples ** (1.0 / a.dim))))
    pts = box_nodes(box, per_axis)
    gap = a(pts) - b(pts)
    i = int(np.argmin(gap))
    return float(gap[i]), pts[i]


# --------------------------------------------------------------------------
# log-Hoelder constants
# --------------------------------------------------------------------------


def _log_factor(d):
    return np.log(np.e + 1.0 / d)


def estimate_log_holder(g: _PointFunction, box, samples: int = 4096,
                        level: int | None = None, n_witness: int = 5) -> LogHolderReport:
    """Estimate c_log(g) as a maximum of |g(x)-g(y)| log(e + 1/|x-y|).

    The pair set is the union of node pairs on a dyadic grid (axis strides
    1, 2, 4, ... grid steps) and the first ``samples`` points of an
    unscrambled Halton sequence in the product box. Both parts are nested
    in their parameters, so the estimate is monotone in the sample set.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    n = g.dim
    box = normalize_box(box, n)
    if level is None:
        level = 12 if n == 1 else max(2, 16 // n - 2)
    if g.is_constant:
        if math.isinf(g.constant):
            raise ValueError("g evaluates to infinity; check 1/p instead")
        c_inf = 0.0 if g.limit is not None else None
        return LogHolderReport(0.0, c_inf, g.limit, [])

    widths = np.array([hi - lo for lo, hi in box])
    step = widths.min() * 2.0 ** -level
    counts = np.maximum(1, np.round(widths / step).astype(int)) + 1
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(box, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = g(np.stack([m.ravel() for m in mesh], axis=1)).reshape(mesh[0].shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("g evaluates to infinity; check 1/p instead")

    best: list[tuple[float, tuple, tuple]] = []

    def offer(ratio, xs, ys):
        if ratio.size == 0:
            return
        k = min(n_witness, ratio.size)
        idx = np.argpartition(-ratio, k - 1)[:k]
        for i in idx:
            best.append((float(ratio[i]), tuple(xs[i]), tuple(ys[i])))

    for ax in range(n):
        h = (box[ax][1] - box[ax][0]) / (counts[ax] - 1)
        stride = 1
        while stride < counts[ax]:
            a = np.take(vals, np.arange(0, counts[ax] - stride), axis=ax)
            b = np.take(vals, np.arange(stride, counts[ax]), axis=ax)
            ratio = np.abs(a - b) * _log_factor(stride * h)
            flat = ratio.ravel()
            k = min(n_witness, flat.size)
            top = np.argpartition(-flat, k - 1)[:k]
            for t in top:
                idx = np.unravel_index(t, ratio.shape)
                xi = [axes[d][idx[d]] for d in range(n)]
                yi = list(xi)
                yi[ax] = axes[ax][idx[ax] + stride]
                best.append((float(flat[t]), tuple(xi), tuple(yi)))
            stride *= 2

    halton = qmc.Halton(d=2 * n, scramble=False).random(samples)
    lo = np.array([b[0] for b in box])
    xs = lo + halton[:, :n] * widths
    ys = lo + halton[:, n:] * widths
    d = np.linalg.norm(xs - ys, axis=1)
    keep = d > 0
    xs, ys, d = xs[keep], ys[keep], d[keep]
    gx, gy = g(xs), g(ys)
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise ValueError("g evaluates to infinity; check 1/p instead")
    offer(np.abs(gx - gy) * _log_factor(d), xs, ys)

    best.sort(key=lambda t: -t[0])
    c_loc = best[0][0] if best else 0.0

    c_inf = None
    if g.limit is not None:
        pts = np.concatenate([np.stack([m.ravel() for m in mesh], axis=1), xs])
        gv = np.concatenate([vals.ravel(), gx])
        c_inf = float(np.max(np.abs(gv - g.limit) * np.log(np.e + np.linalg.norm(pts, axis=1))))
    return LogHolderReport(c_loc, c_inf, g.limit, [(x, y) for _, x, y in best[:n_witness]])


def _pair_difference_1d(g: _PointFunction, lo: float, hi: float, d: float) -> float:
    """max over x in [lo, hi-d] of |g(x+d) - g(x)| for the 1-D standard families."""
    _, _, _, _, _, G = _family(g.family, g.params, 1)
    if g.family == "sigmoid_step":
        c = float(np.ravel([g.params.get("center", 0.0)])[0])
        x = float(np.clip(c - d / 2.0, lo, hi - d))
        return float(abs(g(x + d) - g(x)))
    c = float(np.ravel([g.params.get("center", 0.0)])[0])
    u_lo, u_hi = lo - c, hi - d - c
    cands = [u_lo, u_hi] + [u for u in (0.0, -d) if u_lo <= u <= u_hi]
    return max(float(abs(G(abs(u)) - G(abs(u + d)))) for u in cands)


def analytic_log_holder(g: _PointFunction, box) -> float:
    """Reference c_log of a 1-D standard family on ``box``.

    Reduces the pair supremum to sup_d delta(d) log(e + 1/d), where delta(d)
    is the exact largest oscillation at distance d (closed form per family),
    then maximizes over d on a fine grid with a bounded local refinement.
    """
    if g.dim != 1:
        raise NotImplementedError("analytic constants are provided for 1-D families only")
    if g.is_constant:
        return 0.0
    if g.family not in FAMILIES:
        raise ValueError(f"no analytic constant for family {g.family!r}")
    (lo, hi), = normalize_box(box, 1)
    width = hi - lo

    def objective(d):
        return _pair_difference_1d(g, lo, hi, d) * float(_log_factor(d))

    ds = np.unique(np.concatenate([np.geomspace(width * 1e-9, width, 3000),
                                   np.linspace(width / 4000, width, 4000)]))
    vals = np.array([objective(d) for d in ds])
    i = int(np.argmax(vals))
    a, b = ds[max(i - 1, 0)], ds[min(i + 1, len(ds) - 1)]
    best = vals[i]
    if b > a:
        res = minimize_scalar(lambda d: -objective(d), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * width})
        best = max(best, -res.fun)
    return float(best)
