"""Experiment configuration: TOML files with dotted keys.

A config describes one experiment. Example::

    kind = "embedding_sweep"
    n = 1
    J_range = "0..8"
    trials = 4
    families = ["random_sparse", { id = "gap_chaser", focus = [0.0] }]
    output.csv = "sweep.csv"
    output.json = "sweep.json"

    case.name = "jawerth"
    case.source.kind = "triebel"
    case.source.p = 1.0
    case.source.q = 4.0
    case.source.s = 1.0
    case.target.kind = "besov"
    case.target.p = 2.0
    case.target.q = 1.0
    case.target.s.family = "conjugate"

Exponent and smoothness entries are numbers, ``"inf"``, or tables with a
``family`` key plus that family's parameters. ``family = "conjugate"`` on
the target derives s (or p) from the source by Sobolev conjugacy. Several
cases go under ``cases.<name>`` instead of ``case``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exponents import (ExponentFunction, SmoothnessFunction, conjugate_exponent,
                        conjugate_smoothness, constant_exponent, constant_smoothness,
                        make_standard_exponent, make_standard_smoothness, normalize_box)
from .embedlab.estimate import EmbeddingCase, make_case
from .embedlab.generators import get_family
from .embedlab.proofs import default_r, franke_epsilon, jawerth_epsilon
from .luxemburg import DEFAULT_TOL
from .spaces import SpaceSpec, default_box

__all__ = ["ConfigError", "ExperimentConfig", "CaseConfig", "KINDS", "CHECKS",
           "load_config", "parse_config", "WORKERS_ENV"]

KINDS = ("norm", "embedding_sweep", "proof_check", "counterexample")
CHECKS = ("franke_terms", "jawerth_chain", "aux_inequality", "franke_variable")
WORKERS_ENV = "VARSEQ_WORKERS"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


@dataclass
class CaseConfig:
    name: str
    raw: dict
    case: Optional[EmbeddingCase] = None
    space: Optional[SpaceSpec] = None
    check: Optional[str] = None
    params: dict = field(default_factory=dict)
    field_path: Optional[Path] = None


@dataclass
class ExperimentConfig:
    kind: str
    n: int
    seed: int
    tol: float
    trials: int
    J_values: list
    L_policy: Optional[Callable]
    box: tuple
    families: list
    bounded_slope: float
    growing_slope: float
    workers: int
    csv_path: Path
    json_path: Path
    cases: list
    raw: dict
    digest: str

    def summary(self) -> dict:
        return {"kind": self.kind, "digest": self.digest,
                "cases": [c.name for c in self.cases], "J_values": self.J_values,
                "csv": str(self.csv_path), "json": str(self.json_path)}


_MISSING = object()


def _get(d: dict, key: str, path: str, default=_MISSING):
    if key in d:
        return d[key]
    if default is _MISSING:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return default


def _number(v, key: str) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    return float(v)


def _function_spec(v, key: str):
    """(family, params) from a number, "inf" or a table."""
    if isinstance(v, dict):
        v = dict(v)
        fam = v.pop("family", None)
        if fam is None:
            raise ConfigError(f"{key}.family", "missing required key")
        return str(fam), v
    return "constant", {"value": _number(v, key)}


def _exponent(v, key: str, n: int) -> ExponentFunction:
    fam, params = _function_spec(v, key)
    try:
        if fam == "constant":
            return constant_exponent(_number(params.get("value"), f"{key}.value"), n)
        return make_standard_exponent(fam, params, n)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"invalid exponent: {exc}") from exc


def _smoothness(v, key: str, n: int) -> SmoothnessFunction:
    fam, params = _function_spec(v, key)
    try:
        if fam == "constant":
            return constant_smoothness(_number(params.get("value"), f"{key}.value"), n)
        return make_standard_smoothness(fam, params, n)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"invalid smoothness: {exc}") from exc


def _is_conjugate(v) -> bool:
    return isinstance(v, dict) and v.get("family") == "conjugate"


def _space(d: dict, key: str, n: int, source: SpaceSpec | None = None) -> SpaceSpec:
    if not isinstance(d, dict):
        raise ConfigError(key, "expected a table")
    kind = _get(d, "kind", key)
    if kind not in ("besov", "triebel"):
        raise ConfigError(f"{key}.kind", f"expected besov or triebel, got {kind!r}")
    p_raw, s_raw = _get(d, "p", key), _get(d, "s", key)
    q = _exponent(_get(d, "q", key), f"{key}.q", n)
    if _is_conjugate(p_raw) and _is_conjugate(s_raw):
        raise ConfigError(key, "p and s cannot both be conjugate")
    if (_is_conjugate(p_raw) or _is_conjugate(s_raw)) and source is None:
        raise ConfigError(key, "conjugate entries are only allowed on the target")
    try:
        if _is_conjugate(s_raw):
            p = _exponent(p_raw, f"{key}.p", n)
            s = conjugate_smoothness(source.s, source.p, p)
        elif _is_conjugate(p_raw):
            s = _smoothness(s_raw, f"{key}.s", n)
            p = conjugate_exponent(source.p, source.s, s)
        else:
            p = _exponent(p_raw, f"{key}.p", n)
            s = _smoothness(s_raw, f"{key}.s", n)
        return SpaceSpec(kind, p, q, s)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc


def _j_values(v, key: str = "J_range") -> list:
    if isinstance(v, str) and ".." in v:
        lo, hi = v.split("..", 1)
        try:
            lo, hi = int(lo), int(hi)
        except ValueError as exc:
            raise ConfigError(key, f"expected 'a..b', got {v!r}") from exc
        vals = list(range(lo, hi + 1))
    elif isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        vals = list(v)
    else:
        raise ConfigError(key, "expected 'a..b' or a list of integers")
    if not vals:
        raise ConfigError(key, "empty range")
    if min(vals) < 0 or max(vals) > 14:
        raise ConfigError(key, "levels must lie in 0..14")
    return vals


def _families(v, key: str = "families") -> list:
    if not isinstance(v, list) or not v:
        raise ConfigError(key, "expected a nonempty list")
    out = []
    for i, item in enumerate(v):
        try:
            out.append(get_family(item))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{key}[{i}]", str(exc)) from exc
    return out


def _workers(raw) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            w = int(env)
        except ValueError as exc:
            raise ConfigError(WORKERS_ENV, f"expected an integer, got {env!r}") from exc
    else:
        w = raw.get("workers", 1)
        if not isinstance(w, int) or isinstance(w, bool):
            raise ConfigError("workers", "expected an integer")
    if w < 1:
        raise ConfigError("workers", "must be >= 1")
    return w


def _pos(v, key):
    x = _number(v, key)
    if not x > 0:
        raise ConfigError(key, "must be positive")
    return x


def _case(name: str, d: dict, key: str, kind: str, n: int, box, base: Path) -> CaseConfig:
    if not isinstance(d, dict):
        raise ConfigError(key, "expected a table")
    cc = CaseConfig(name, d)
    if kind == "norm":
        cc.space = _space(_get(d, "space", key), f"{key}.space", n)
        if "field" in d:
            cc.field_path = (base / str(d["field"])).resolve()
        return cc
    if kind in ("embedding_sweep", "counterexample"):
        src = _space(_get(d, "source", key), f"{key}.source", n)
        tgt = _space(_get(d, "target", key), f"{key}.target", n, src)
        try:
            cc.case = make_case(src, tgt, box, name=name)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc
        if kind == "counterexample":
            sep = cc.case.hypothesis.separation
            if sep is None or sep > 1e-9 or sep < -1e-9:
                raise ConfigError(f"{key}.target.s",
                                  f"counterexample needs a smoothness gap closing to 0 (inf gap {sep})")
        return cc
    check = _get(d, "check", key)
    if check not in CHECKS:
        raise ConfigError(f"{key}.check", f"expected one of {CHECKS}, got {check!r}")
    cc.check = check
    P = cc.params
    if check == "aux_inequality":
        P["eps"] = _pos(_get(d, "eps", key), f"{key}.eps")
        return cc
    if check == "franke_terms":
        p0 = _pos(_get(d, "p0", key), f"{key}.p0")
        p1 = _pos(_get(d, "p1", key), f"{key}.p1")
        q = _pos(_get(d, "q", key), f"{key}.q")
        if not p0 < p1 < math.inf:
            raise ConfigError(f"{key}.p1", "need p0 < p1 < inf")
        if q > min(1.0, p0):
            raise ConfigError(f"{key}.q", "need q <= min(1, p0)")
        P.update(p0=p0, p1=p1, q=q)
        for opt in ("beta", "delta"):
            if opt in d:
                P[opt] = _pos(d[opt], f"{key}.{opt}")
        return cc
    p0 = _exponent(_get(d, "p0", key), f"{key}.p0", n)
    p1 = _exponent(_get(d, "p1", key), f"{key}.p1", n)
    if "eps" in d:
        P["eps"] = _pos(d["eps"], f"{key}.eps")
    if check == "jawerth_chain":
        q = _exponent(_get(d, "q", key), f"{key}.q", n)
        s0 = _smoothness(_get(d, "s0", key), f"{key}.s0", n)
        s1 = conjugate_smoothness(s0, p0, p1)
        try:
            eps_max = jawerth_epsilon(p0, p1, s0, s1, box)
        except ValueError as exc:
            raise ConfigError(f"{key}.p1", str(exc)) from exc
        if P.get("eps", 0) > eps_max:
            raise ConfigError(f"{key}.eps", f"must be <= {eps_max}")
        P.update(p0=p0, p1=p1, q=q, s0=s0, s1=s1)
        return cc
    if math.isinf(p1.sup):
        raise ConfigError(f"{key}.p1", "need p1^+ < inf")
    try:
        eps_max = franke_epsilon(p0, p1, box)
    except ValueError as exc:
        raise ConfigError(f"{key}.p1", str(exc)) from exc
    if P.get("eps", 0) > eps_max:
        raise ConfigError(f"{key}.eps", f"must be <= {eps_max}")
    if "r" in d:
        r = d["r"]
        if not isinstance(r, int) or r < default_r(p0, p1):
            raise ConfigError(f"{key}.r", f"need an integer >= {default_r(p0, p1)}")
        P["r"] = r
    P.update(p0=p0, p1=p1)
    return cc


def digest_of(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True, default=str).encode()).hexdigest()


def parse_config(raw: dict, base: Path | str = ".", stem: str = "experiment") -> ExperimentConfig:
    """Validate a parsed TOML document; raises :class:`ConfigError`."""
    base = Path(base)
    kind = _get(raw, "kind", "")
    if kind not in KINDS:
        raise ConfigError("kind", f"expected one of {KINDS}, got {kind!r}")
    n = raw.get("n", 1)
    if n not in (1, 2, 3) or isinstance(n, bool):
        raise ConfigError("n", "dimension must be 1, 2 or 3")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "expected a nonnegative integer")
    tol = _pos(raw.get("tol", DEFAULT_TOL), "tol")
    trials = raw.get("trials", 4)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError("trials", "expected an integer >= 1")
    J_values = _j_values(_get(raw, "J_range", ""))
    try:
        box = normalize_box(raw.get("box", default_box(n)), n)
    except (ValueError, TypeError) as exc:
        raise ConfigError("box", str(exc)) from exc

    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid", "expected a table")
    if "L" in grid and "L_offset" in grid:
        raise ConfigError("grid", "give at most one of L and L_offset")
    L_policy = None
    if "L" in grid:
        L_fixed = grid["L"]
        if not isinstance(L_fixed, int) or L_fixed > 14 or L_fixed < max(J_values):
            raise ConfigError("grid.L", "need an integer with max(J) <= L <= 14")
        L_policy = L_fixed
    elif "L_offset" in grid:
        off = grid["L_offset"]
        if not isinstance(off, int) or off < 0 or max(J_values) + off > 14:
            raise ConfigError("grid.L_offset", "need an integer >= 0 with max(J) + offset <= 14")
        L_policy = (lambda J, off=off: J + off)

    default_fams = {"norm": ["single_coefficient"], "proof_check": ["random_sparse"]}
    fam_raw = raw.get("families", default_fams.get(kind))
    families = _families(fam_raw) if fam_raw is not None else None
    if families is None and kind == "embedding_sweep":
        raise ConfigError("families", "missing required key")

    verdict = raw.get("verdict", {})
    bounded = _number(verdict.get("bounded_slope", 0.02), "verdict.bounded_slope")
    growing = _number(verdict.get("growing_slope", 0.1), "verdict.growing_slope")
    if bounded >= growing:
        raise ConfigError("verdict", "bounded_slope must be below growing_slope")

    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output", "expected a table")
    csv_path = (base / out.get("csv", f"{stem}.csv")).resolve()
    json_path = (base / out.get("json", f"{stem}.json")).resolve()

    if "case" in raw and "cases" in raw:
        raise ConfigError("case", "give either case or cases, not both")
    if "case" in raw:
        d = raw["case"]
        name = d.get("name", "case") if isinstance(d, dict) else "case"
        items = [(str(name), d, "case")]
    elif "cases" in raw and isinstance(raw["cases"], dict) and raw["cases"]:
        items = [(k, v, f"cases.{k}") for k, v in sorted(raw["cases"].items())]
    else:
        raise ConfigError("case", "missing required key")
    cases = [_case(name, d, key, kind, n, box, base) for name, d, key in items]

    return ExperimentConfig(kind, n, seed, tol, trials, J_values, L_policy, box, families,
                            bounded, growing, _workers(raw), csv_path, json_path, cases, raw,
                            digest_of(raw))


def load_config(path) -> ExperimentConfig:
    """Read and validate a TOML config. Missing files raise OSError."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"TOML syntax error: {exc}") from exc
    return parse_config(raw, path.parent, path.stem)
