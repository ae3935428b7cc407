"""Command-line experiment runner.

    varseq run CONFIG          run an experiment, write CSV rows and a JSON summary
    varseq plot RECORD --kind  emit plot-ready CSV (ratio_vs_J, term_decomposition, profile)
    varseq validate CONFIG     parse and check a config without computing
    varseq version

Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence,
4 I/O error. Failures print a one-line JSON report on stderr. The worker
count comes from the VARSEQ_WORKERS environment variable (default: the
config's ``workers``, else 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._scale import ConvergenceError
from .config import ConfigError, ExperimentConfig, load_config
from .embedlab.estimate import TruncationNote, counterexample_search, estimate_constant
from .embedlab.proofs import (NormalizationError, check_aux_inequality, franke_terms,
                              franke_variable_check, jawerth_chain)
from .luxemburg import Grid, GridFunction, read_grid_function
from .rearrange import rearrange_grid, rearrange_row
from .spaces import read_coefficients, space_norm, synthesize_level

__all__ = ["main", "run", "emit_plot_data", "CSV_COLUMNS", "PLOT_KINDS"]

CSV_COLUMNS = ["case", "J", "generator", "trial", "norm", "source_norm", "target_norm",
               "ratio", "I", "II", "III", "f_norm", "b_norm"]
PLOT_KINDS = {
    "ratio_vs_J": ["J", "sup_ratio", "family_id"],
    "term_decomposition": ["J", "I", "II", "III", "f_norm", "b_norm"],
    "profile": ["t", "value"],
}

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, report: dict):
        super().__init__(report.get("message", ""))
        self.code = code
        self.report = report


# --------------------------------------------------------------------------
# per-kind sample evaluators
# --------------------------------------------------------------------------


def _aux_phi(gamma) -> GridFunction:
    L = gamma.J_max
    total = np.zeros(Grid(gamma.box, L).size)
    for j in range(L + 1):
        total += synthesize_level(gamma, j, None, L).values.ravel()
    return GridFunction(Grid(gamma.box, L), total)


def _proof_fn(cfg: ExperimentConfig, cc):
    P = cc.params
    tol = cfg.tol

    if cc.check == "franke_terms":
        def fn(g):
            t = franke_terms(g, P["p0"], P["p1"], P["q"], P.get("beta"), P.get("delta"))
            return {"ratio": t.f_norm / t.b_norm, "source_norm": t.b_norm,
                    "target_norm": t.f_norm, **t.as_row()}
    elif cc.check == "jawerth_chain":
        def fn(g):
            L = None if cfg.L_policy is None else (
                cfg.L_policy if isinstance(cfg.L_policy, int) else cfg.L_policy(g.J_max))
            r = jawerth_chain(g, P["p0"], P["p1"], P["q"], P["s0"], P["s1"], P.get("eps"), L, tol)
            return {"ratio": r.end_to_end, "source_norm": r.norms[0], "target_norm": r.norms[3],
                    "I": r.aux["I"], "II": r.aux["II"]}
    elif cc.check == "aux_inequality":
        def fn(g):
            rep = check_aux_inequality(_aux_phi(g), P["eps"])
            return {"ratio": rep.ratio, "norm": rep.lhs_infinite, "source_norm": rep.l1,
                    "target_norm": rep.lhs_infinite}
    else:
        def fn(g):
            try:
                rep = franke_variable_check(g, P["p0"], P["p1"], r=P.get("r"), eps=P.get("eps"),
                                            tol=tol)
            except NormalizationError as exc:
                g = g.scaled(1.0 / exc.factor)
                rep = franke_variable_check(g, P["p0"], P["p1"], r=P.get("r"),
                                            eps=P.get("eps"), tol=tol, check_normalized=False)
            return {"ratio": rep.target_norm, "norm": rep.normalization,
                    "target_norm": rep.target_norm, "I": rep.I, "II": rep.II,
                    "f_norm": rep.beta_f_norm, "b_norm": rep.beta_b_norm}
    return fn


def _run_case(cfg: ExperimentConfig, cc):
    common = dict(seed=cfg.seed, tol=cfg.tol, workers=cfg.workers, box=cfg.box)
    slopes = dict(bounded_slope=cfg.bounded_slope, growing_slope=cfg.growing_slope)
    if cfg.kind == "norm":
        spec = cc.space
        L_of = cfg.L_policy
        if cc.field_path is not None:
            gamma = read_coefficients(cc.field_path, cfg.box)
            L = None if L_of is None else (L_of if isinstance(L_of, int) else L_of(gamma.J_max))
            val = space_norm(gamma, spec, L, cfg.tol)
            rows = [{"J": gamma.J_max, "generator": "file", "trial": 0, "norm": val}]
            return rows, {"per_J": [{"J": gamma.J_max, "max_norm": val}]}, []

        def fn(g):
            L = None if L_of is None else (L_of if isinstance(L_of, int) else L_of(g.J_max))
            v = space_norm(g, spec, L, cfg.tol)
            return {"ratio": v, "norm": v}
        est = estimate_constant(None, cfg.families, cfg.J_values, cfg.trials, ratio_fn=fn,
                                n=cfg.n, **common, **slopes)
        rows = [{k: v for k, v in r.items() if k not in ("ratio", "source_norm", "target_norm")}
                for r in est.rows]
        summary = {"per_J": [{"J": J, "max_norm": v, "argmax": gen} for J, v, gen in est.per_J]}
        return rows, summary, est.failures
    if cfg.kind == "embedding_sweep":
        est = estimate_constant(cc.case, cfg.families, cfg.J_values, cfg.trials,
                                L_policy=cfg.L_policy, **common, **slopes)
    elif cfg.kind == "counterexample":
        est = counterexample_search(cc.case, cfg.families, cfg.J_values, cfg.trials,
                                    L_policy=cfg.L_policy, **common, **slopes)
    else:
        est = estimate_constant(None, cfg.families, cfg.J_values, cfg.trials,
                                ratio_fn=_proof_fn(cfg, cc), n=cfg.n, **common, **slopes)
    summary = est.to_dict()
    if cc.case is not None:
        h = cc.case.hypothesis
        summary["hypothesis"] = {"separation": h.separation, "conjugacy_defect": h.conjugacy_defect,
                                 "conjugate": h.conjugate, "monotone_p": h.monotone_p}
        summary["source"] = cc.case.source.describe()
        summary["target"] = cc.case.target.describe()
    return est.rows, summary, est.failures


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.floating,)):
        return _fmt(float(v))
    return str(v)


def format_rows(rows: list) -> str:
    rows = sorted(rows, key=lambda r: (r["case"], r["J"], r["generator"], r["trial"]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> dict:
    """Execute an experiment and write its CSV and JSON; returns the summary."""
    start = time.perf_counter()
    all_rows, cases, failures = [], {}, []
    for cc in cfg.cases:
        try:
            rows, summary, fails = _run_case(cfg, cc)
        except ConvergenceError as exc:
            raise CliError(EXIT_NUMERIC, {"error": "non-convergence", "case": cc.name,
                                          "message": str(exc)}) from exc
        except ValueError as exc:
            raise CliError(EXIT_NUMERIC, {"error": "numeric", "case": cc.name,
                                          "message": str(exc)}) from exc
        all_rows.extend({"case": cc.name, **r} for r in rows)
        cases[cc.name] = summary
        failures.extend({"case": cc.name, **f} for f in fails)
    summary = {
        "version": __version__,
        "config_digest": cfg.digest,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "J_values": cfg.J_values,
        "cases": cases,
        "failures": failures,
        "caveat": TruncationNote,
        "wall_time": time.perf_counter() - start,
    }
    try:
        cfg.csv_path.parent.mkdir(parents=True, exist_ok=True)
        cfg.csv_path.write_text(format_rows(all_rows))
        cfg.json_path.parent.mkdir(parents=True, exist_ok=True)
        cfg.json_path.write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, {"error": "io", "message": str(exc)}) from exc
    stuck = [f for f in failures if f.get("error", "").startswith("ConvergenceError")]
    if stuck:
        raise CliError(EXIT_NUMERIC, {"error": "non-convergence", "message":
                                      f"{len(stuck)} samples did not converge",
                                      "samples": stuck[:20]})
    return summary


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


# --------------------------------------------------------------------------
# plot data
# --------------------------------------------------------------------------


def _read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def emit_plot_data(record, kind: str, case: str | None = None, level: int | None = None) -> str:
    """Plot-ready CSV text for a results CSV, a grid function or a coefficient file."""
    if kind not in PLOT_KINDS:
        raise CliError(EXIT_CONFIG, {"error": "config", "key": "kind",
                                     "message": f"unknown plot kind {kind!r}; "
                                                f"expected one of {sorted(PLOT_KINDS)}"})
    path = Path(record)
    try:
        table = _read_csv(path)
    except OSError as exc:
        raise CliError(EXIT_IO, {"error": "io", "message": str(exc)}) from exc
    if not table:
        raise CliError(EXIT_CONFIG, {"error": "config", "key": "record", "message": "empty record"})
    head = table[0][0] if table[0] else ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_KINDS[kind])

    def missing(what):
        return CliError(EXIT_CONFIG, {"error": "config", "key": "record",
                                      "message": f"record lacks {what} needed for {kind}"})

    if kind == "profile":
        if head == "level":
            prof = rearrange_grid(read_grid_function(path))
        elif head == "n":
            if level is None:
                raise CliError(EXIT_CONFIG, {"error": "config", "key": "level",
                                             "message": "coefficient records need --level"})
            prof = rearrange_row(read_coefficients(path), level).profile()
        else:
            raise missing("a grid function or coefficient field")
        for t, v in prof.plot_rows():
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    if head != "case":
        raise missing("result rows")
    header = table[0]
    rows = [dict(zip(header, r)) for r in table[1:] if r]
    names = sorted({r["case"] for r in rows})
    if case is None:
        if len(names) > 1:
            raise CliError(EXIT_CONFIG, {"error": "config", "key": "case",
                                         "message": f"record holds cases {names}; pick one with --case"})
    else:
        rows = [r for r in rows if r["case"] == case]
        if not rows:
            raise CliError(EXIT_CONFIG, {"error": "config", "key": "case",
                                         "message": f"no rows for case {case!r}"})
    if kind == "ratio_vs_J":
        rows = [r for r in rows if r.get("ratio")]
        if not rows:
            raise missing("ratio values")
        for J in sorted({int(r["J"]) for r in rows}):
            cand = [r for r in rows if int(r["J"]) == J]
            best = max(cand, key=lambda r: (float(r["ratio"]), r["generator"]))
            w.writerow([J, best["ratio"], best["generator"]])
        return buf.getvalue()
    cols = PLOT_KINDS[kind][1:]
    rows = [r for r in rows if all(r.get(c) for c in cols)]
    if not rows:
        raise missing("the I, II, III, f_norm, b_norm columns")
    for r in rows:
        w.writerow([r["J"]] + [r[c] for c in cols])
    return buf.getvalue()


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varseq", description="Variable-exponent sequence-space experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p = sub.add_parser("plot", help="emit plot-ready CSV from a record")
    p.add_argument("record")
    p.add_argument("--kind", required=True)
    p.add_argument("--case")
    p.add_argument("--level", type=int)
    p.add_argument("--out")
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    sub.add_parser("version", help="print the library version")
    return ap


def _load(path) -> ExperimentConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, {"error": "config", "key": exc.key,
                                     "message": exc.message}) from exc
    except OSError as exc:
        raise CliError(EXIT_IO, {"error": "io", "message": str(exc)}) from exc


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "validate":
            cfg = _load(args.config)
            print(json.dumps(cfg.summary(), indent=2))
            return 0
        if args.command == "run":
            cfg = _load(args.config)
            summary = run(cfg)
            print(json.dumps({"csv": str(cfg.csv_path), "json": str(cfg.json_path),
                              "cases": {k: v.get("verdict") for k, v in summary["cases"].items()}}))
            return 0
        text = emit_plot_data(args.record, args.kind, args.case, args.level)
        if args.out:
            try:
                Path(args.out).write_text(text)
            except OSError as exc:
                raise CliError(EXIT_IO, {"error": "io", "message": str(exc)}) from exc
        else:
            sys.stdout.write(text)
        return 0
    except CliError as exc:
        print(json.dumps(exc.report, default=str), file=sys.stderr)
        return exc.code
    except ConvergenceError as exc:
        print(json.dumps({"error": "non-convergence", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(json.dumps({"error": "config", "key": "record", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
