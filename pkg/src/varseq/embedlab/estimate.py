"""Embedding ratios and empirical embedding constants.

The constant reported for a case is a supremum of ratios over generated
fields, hence a lower bound on the true embedding constant.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .._scale import ConvergenceError
from ..exponents import box_nodes, normalize_box, separation_witness
from ..luxemburg import DEFAULT_TOL
from ..spaces import CoefficientField, SpaceSpec, space_norm
from .generators import GeneratorFamily, get_family

__all__ = [
    "ConstantEstimate",
    "EmbeddingCase",
    "HypothesisReport",
    "TruncationNote",
    "counterexample_search",
    "embedding_ratio",
    "estimate_constant",
    "fit_growth",
    "make_case",
    "sobolev_check",
    "trial_seed",
]

TruncationNote = ("all norms are computed on a truncated box with finitely many levels; "
                  "they cannot distinguish whole-space from bounded-domain behaviour, and "
                  "every reported constant is a lower bound over the generated fields")


@dataclass
class HypothesisReport:
    separation: Optional[float]
    conjugacy_defect: Optional[float]
    monotone_p: Optional[bool]
    witness: Optional[tuple] = None

    @property
    def conjugate(self) -> bool:
        return self.conjugacy_defect is not None and self.conjugacy_defect <= 1e-12


@dataclass
class EmbeddingCase:
    source: SpaceSpec
    target: SpaceSpec
    hypothesis: HypothesisReport
    name: str = "case"


def _sobolev_index(spec: SpaceSpec):
    n = spec.n
    es, ep = spec.s.evaluator, spec.p.evaluator
    return lambda x: es(x) - n / ep(x)


def make_case(source: SpaceSpec, target: SpaceSpec, box=None, samples: int = 1025,
              name: str = "case") -> EmbeddingCase:
    """Attach a computed hypothesis report (separation, conjugacy defect, p0 <= p1)."""
    n = source.n
    box = normalize_box(((-2.0, 2.0),) * n if box is None else box, n)
    if source.s is None or target.s is None:
        return EmbeddingCase(source, target, HypothesisReport(None, None, None), name)
    sep, where = separation_witness(source.s, target.s, box, samples)
    per_axis = samples if n == 1 else max(3, int(round(samples ** (1.0 / n))))
    pts = box_nodes(box, per_axis)
    a, b = _sobolev_index(source)(pts), _sobolev_index(target)(pts)
    with np.errstate(invalid="ignore"):
        defect = float(np.nanmax(np.abs(a - b)))
    monotone = bool(np.all(source.p(pts) <= target.p(pts)))
    return EmbeddingCase(source, target,
                         HypothesisReport(sep, defect, monotone, tuple(np.atleast_1d(where))), name)


def embedding_ratio(gamma: CoefficientField, case: EmbeddingCase, L: int | None = None,
                    tol: float = DEFAULT_TOL, return_norms: bool = False):
    """||gamma | target|| / ||gamma | source||."""
    src = space_norm(gamma, case.source, L, tol)
    if src < 1e-300:
        raise ValueError("source norm vanishes; ratio undefined")
    tgt = space_norm(gamma, case.target, L, tol)
    return (tgt / src, src, tgt) if return_norms else tgt / src


def sobolev_check(gamma: CoefficientField, p0, p1, q, s0, s1=None, L: int | None = None,
                  tol: float = DEFAULT_TOL) -> float:
    """||gamma | b^{s1}_{p1,q}|| / ||gamma | b^{s0}_{p0,q}||; s1 defaults to the conjugate."""
    from ..exponents import conjugate_smoothness
    src = SpaceSpec.besov(p0, q, s0, gamma.n)
    if s1 is None:
        s1 = conjugate_smoothness(src.s, src.p, SpaceSpec.besov(p1, q, 0.0, gamma.n).p)
    tgt = SpaceSpec.besov(p1, q, s1, gamma.n)
    case = EmbeddingCase(src, tgt, HypothesisReport(None, None, None))
    return embedding_ratio(gamma, case, L, tol)


@dataclass
class ConstantEstimate:
    per_J: list
    overall_sup: float
    growth_slope: float
    verdict: str
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_J": [{"J": J, "sup_ratio": r, "argmax": g} for J, r, g in self.per_J],
            "overall_sup": self.overall_sup,
            "growth_slope": self.growth_slope,
            "verdict": self.verdict,
            "failures": len(self.failures),
            "witness": self.witness,
        }


def fit_growth(per_J, bounded_slope: float = 0.02, growing_slope: float = 0.1):
    """Least-squares slope of log2(sup) against J and the derived verdict."""
    pts = [(J, r) for J, r, *_ in per_J if r > 0 and math.isfinite(r)]
    if len(pts) < 2:
        slope = 0.0
    else:
        Js = np.array([p[0] for p in pts], dtype=float)
        ys = np.log2([p[1] for p in pts])
        slope = float(np.polyfit(Js, ys, 1)[0])
    sups = [r for _, r, *_ in per_J]
    monotone = all(b >= a for a, b in zip(sups, sups[1:]))
    if slope <= bounded_slope:
        verdict = "bounded"
    elif slope >= growing_slope and monotone:
        verdict = "growing"
    else:
        verdict = "inconclusive"
    return slope, verdict


def trial_seed(seed: int, family_id: str, J: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), zlib.crc32(family_id.encode()), int(J), int(trial)])


def estimate_constant(case, families: Sequence, J_range: Sequence[int], trials: int = 4,
                      seed: int = 0, L_policy: Callable | int | None = None,
                      tol: float = DEFAULT_TOL, bounded_slope: float = 0.02,
                      growing_slope: float = 0.1, workers: int = 1, box=None,
                      ratio_fn: Callable | None = None, n: int | None = None) -> ConstantEstimate:
    """Maximize the embedding ratio over families x trials for each J.

    ``case`` is an :class:`EmbeddingCase`; alternatively pass ``ratio_fn``
    (field -> ratio, (ratio, source, target), or a dict with a "ratio" key
    whose other entries become extra row columns) to estimate any other
    quotient. ``L_policy`` maps J to a grid level (default: the norm's own
    default). Deterministic families run once per J. Samples whose norm
    evaluation fails are recorded in ``failures`` and skipped.
    """
    J_range = list(J_range)
    if not J_range:
        raise ValueError("J_range must be nonempty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fams = [get_family(f) for f in families]
    if n is None:
        n = case.source.n if case is not None else 1

    def level(J):
        if L_policy is None:
            return None
        return L_policy if isinstance(L_policy, int) else L_policy(J)

    tasks = []
    for J in J_range:
        for fam in fams:
            for t in range(1 if fam.deterministic else trials):
                tasks.append((J, fam, t))

    def run(task):
        J, fam, t = task
        rng = np.random.default_rng(trial_seed(seed, fam.id, J, t))
        try:
            gamma = fam.build(J, rng, n, box)
            extra = {}
            if ratio_fn is not None:
                out = ratio_fn(gamma)
                if isinstance(out, dict):
                    extra = dict(out)
                    ratio = extra.pop("ratio")
                    src = extra.pop("source_norm", math.nan)
                    tgt = extra.pop("target_norm", math.nan)
                elif isinstance(out, tuple):
                    ratio, src, tgt = out
                else:
                    ratio, src, tgt = out, math.nan, math.nan
            else:
                ratio, src, tgt = embedding_ratio(gamma, case, level(J), tol, return_norms=True)
            return {"J": J, "generator": fam.id, "trial": t, "ratio": float(ratio),
                    "source_norm": float(src), "target_norm": float(tgt), **extra}
        except (ConvergenceError, ValueError, FloatingPointError, ZeroDivisionError) as exc:
            return {"J": J, "generator": fam.id, "trial": t, "error": f"{type(exc).__name__}: {exc}"}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    rows = [r for r in results if "error" not in r]
    failures = [r for r in results if "error" in r]
    rows.sort(key=lambda r: (r["J"], r["generator"], r["trial"]))
    per_J = []
    for J in J_range:
        cand = [r for r in rows if r["J"] == J and math.isfinite(r["ratio"])]
        if not cand:
            continue
        best = max(cand, key=lambda r: (r["ratio"], r["generator"]))
        per_J.append((J, best["ratio"], best["generator"]))
    if not per_J:
        raise ValueError("every sample failed; see failures")
    slope, verdict = fit_growth(per_J, bounded_slope, growing_slope)
    overall = max(r for _, r, _ in per_J)
    return ConstantEstimate(per_J, overall, slope, verdict, rows, failures)


def counterexample_search(case: EmbeddingCase, families: Sequence | None = None,
                          J_range: Sequence[int] = range(0, 9), budget: int = 4, seed: int = 0,
                          separation_tol: float = 1e-9, tol: float = DEFAULT_TOL,
                          workers: int = 1, **kwargs) -> ConstantEstimate:
    """Search for growth of the embedding ratio when the smoothness gap closes.

    Requires a case whose sampled gap s0 - s1 is nonnegative with minimum
    below ``separation_tol``. The default families concentrate mass at the
    point where the gap is smallest. A "growing" verdict is numerical
    evidence only.
    """
    hyp = case.hypothesis
    if hyp.separation is None:
        raise ValueError("case needs smoothness functions to locate the vanishing gap")
    if hyp.separation > separation_tol:
        raise ValueError(f"case is well separated (inf gap = {hyp.separation:.3g})")
    if hyp.separation < -separation_tol:
        raise ValueError("smoothness gap is negative somewhere; not a borderline case")
    focus = hyp.witness
    if families is None:
        families = [get_family("gap_chaser").with_params(focus=list(focus)),
                    get_family("lacunary_diagonal"), get_family("single_coefficient")]
    est = estimate_constant(case, families, J_range, budget, seed, tol=tol, workers=workers,
                            **kwargs)
    est.witness = {"focus": [float(v) for v in focus], "separation": hyp.separation,
                   "conjugacy_defect": hyp.conjugacy_defect}
    return est
