"""Command-line runner.

Exit codes: 0 all applicable checks pass, 1 some bound is violated,
2 runtime error in some check, 3 config or usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources

from .. import epigraph as ep
from ..experiments import CASES, run_case
from ..metric_core import INF, trunc_hausdorff, trunc_hausdorff_brute
from ..report import BoundReport
from ..set_calculus import TAU
from .config import (ConfigError, Diagnostic, ExperimentConfig, Resolver, load_config,
                     parse_config, validate)
from .registry import CHECKS, random_checks, run_check

COLUMNS = ("check_id", "relation", "lhs", "rhs", "margin", "tol", "applicable",
           "side_conditions", "passed", "status", "seed")
EXIT_PASS, EXIT_VIOLATION, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2, 3


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def row(rep, seed):
    err = rep.error is not None
    return {
        "check_id": rep.check_id,
        "relation": rep.relation,
        "lhs": "" if err else fmt(rep.lhs),
        "rhs": "" if err else fmt(rep.rhs),
        "margin": "" if err else fmt(rep.margin),
        "tol": fmt(float(rep.tol)),
        "applicable": fmt(rep.applicable),
        "side_conditions": ";".join(f"{s.name}={int(s.satisfied)}" for s in rep.side_conditions),
        "passed": fmt(rep.passed),
        "status": rep.status,
        "seed": str(seed),
    }


def _plain(v):
    """JSON-safe copy of report details."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "tolist"):
        return _plain(v.tolist())
    if isinstance(v, float):
        return fmt(v) if not math.isfinite(v) else v
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return repr(v)


def render(reports, seed, form):
    if form == "json":
        out = []
        for rep in reports:
            r = row(rep, seed)
            r["details"] = _plain(rep.details)
            if rep.error is not None:
                r["error"] = rep.error
            out.append(r)
        return json.dumps(out, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, COLUMNS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        w.writerow(row(rep, seed))
    return buf.getvalue()


def render_table(table, form):
    if form == "json":
        return json.dumps(_plain(table), indent=2) + "\n"
    cols = []
    for r in table:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, cols, lineterminator="\n")
    w.writeheader()
    for r in table:
        w.writerow({k: fmt(v) if k in r else "" for k, v in ((k, r.get(k)) for k in cols)})
    return buf.getvalue()


def exit_code(reports):
    if any(r.error is not None for r in reports):
        return EXIT_RUNTIME
    if any(not r.passed for r in reports):
        return EXIT_VIOLATION
    return EXIT_PASS


def _guard(check_id, fn):
    try:
        out = fn()
    except Exception as e:  # a failing check becomes an error row
        return [BoundReport(check_id, INF, INF, error=f"{type(e).__name__}: {e}")]
    return out if isinstance(out, list) else [out]


def dist_report(cfg, resolver, a, b, rho):
    """dl_rho between two named sets (tree search against brute force) or functions
    (closed form against the epigraph point clouds)."""
    rho = float(rho if rho is not None else cfg.radii["rho"])
    tau = cfg.tolerance("tau")
    if a in cfg.sets:
        A, B = resolver.get("set", a), resolver.get("set", b)
        return BoundReport(f"dist:{a},{b}", trunc_hausdorff(A, B, rho),
                           trunc_hausdorff_brute(A, B, rho), relation="eq", tol=tau,
                           details={"rho": rho})
    f, g = resolver.get("function", a), resolver.get("function", b)
    vstep = cfg.tolerance("vstep")
    return BoundReport(f"dist:{a},{b}", ep.kenmochi_dl(f, g, rho), ep.epi_oracle_dl(f, g, rho, vstep),
                       relation="eq", tol=2 * max(vstep, cfg.tolerance("h")) + tau,
                       details={"rho": rho, "vstep": vstep})


def run_config(cfg, seed=None):
    """All report rows of a validated config."""
    seed = cfg.seed if seed is None else seed
    resolver = Resolver(cfg)
    reports = []
    entries = cfg.entries()
    if not entries and cfg.mode == "experiment":
        entries = [("experiment", {"id": cfg.target})]
    for kind, e in entries:
        if kind == "experiment":
            reports += _guard(e["id"], lambda: run_case(e["id"], seed)[0])
        elif kind == "dist":
            a, b = e["pair"]
            reports += _guard(f"dist:{a},{b}", lambda: dist_report(cfg, resolver, a, b, e["rho"]))
        elif e["args"] is not None:
            reports += _guard(e["id"], lambda: run_check(e["id"], e["args"], cfg, resolver))
        else:
            count = int(e["random"] or 1)
            reports += _guard(e["id"], lambda: random_checks(e["id"], count, seed, cfg))
    return reports


def _retolerance(reports, tolerance):
    if tolerance is None:
        return
    for r in reports:
        r.tol = max(0.0, r.tol - TAU) + tolerance


def bundled(name):
    """Path-like handle of a bundled config (name with or without .json)."""
    name = name if name.endswith(".json") else name + ".json"
    return resources.files("truncdist.cli").joinpath("configs", name)


def bundled_names():
    return sorted(p.name[:-5] for p in resources.files("truncdist.cli").joinpath("configs").iterdir()
                  if p.name.endswith(".json"))


def _load(path):
    if path.startswith("bundled:"):
        return parse_config(bundled(path[len("bundled:"):]).read_text(encoding="utf-8"))
    return load_config(path)


def build_parser():
    p = argparse.ArgumentParser(prog="truncdist", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config, or bundled:<name>")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--tolerance", type=float, default=None,
                        help="replaces the base tolerance of every check")
    sub = p.add_subparsers(dest="command", required=True)
    d = sub.add_parser("dist", parents=[common], help="dl_rho between two named sets or functions")
    d.add_argument("names", nargs="*", help="two names from the config")
    d.add_argument("--rho", type=float, default=None)
    v = sub.add_parser("verify", parents=[common], help="run one check")
    v.add_argument("check_id")
    v.add_argument("--count", type=int, default=10, help="random instances without a config")
    e = sub.add_parser("experiment", parents=[common], help="run a worked example")
    e.add_argument("case_id")
    s = sub.add_parser("sweep", parents=[common], help="parameter table of a sweep")
    s.add_argument("case_id")
    sub.add_parser("run", parents=[common], help="run a config of any kind")
    sub.add_parser("list-checks", help="check ids, experiment ids and bundled configs")
    return p


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_PASS
    if args.command == "list-checks":
        for cid in sorted(CHECKS):
            print(f"check       {cid:20s} {CHECKS[cid].help}")
        for cid in sorted(CASES):
            print(f"experiment  {cid}")
        for name in bundled_names():
            print(f"config      bundled:{name}")
        return EXIT_PASS
    try:
        cfg = _load(args.config) if args.config else None
        if args.command == "verify":
            if args.check_id not in CHECKS:
                raise ConfigError([Diagnostic(f"unknown check-id {args.check_id!r}")])
            if cfg is None:
                cfg = validate(ExperimentConfig(f"verify:{args.check_id}",
                                                checks=[{"random": args.count}]))
            else:
                cfg.checks = [c for c in cfg.checks
                              if c.get("verify", cfg.target) == args.check_id]
        elif args.command in ("experiment", "sweep"):
            if args.case_id not in CASES:
                raise ConfigError([Diagnostic(f"unknown case-id {args.case_id!r}")])
            cfg = cfg or validate(ExperimentConfig(f"experiment:{args.case_id}"))
        elif args.command == "dist":
            if cfg is None:
                raise ConfigError([Diagnostic("dist needs --config")])
            if args.names:
                if len(args.names) != 2:
                    raise ConfigError([Diagnostic("dist takes exactly two names")])
                cfg.kind = "dist"
                cfg.checks = [{"dist": list(args.names), "rho": args.rho}]
                validate(cfg)
        elif cfg is None:
            raise ConfigError([Diagnostic("run needs --config")])
    except ConfigError as e:
        for d in e.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    seed = cfg.seed if args.seed is None else args.seed
    form = args.format or cfg.output.get("format", "csv")
    out = args.out or cfg.output.get("path")
    if args.command == "sweep":
        try:
            rows, table = run_case(args.case_id, seed)
        except Exception as e:
            print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_RUNTIME
        if table is None:
            print(f"config error: {args.case_id!r} is not a sweep", file=sys.stderr)
            return EXIT_CONFIG
        _emit(render_table(table, form), out)
        return exit_code(rows)
    reports = run_config(cfg, seed)
    _retolerance(reports, args.tolerance)
    _emit(render(reports, seed, form), out)
    for r in reports:
        if r.error is not None:
            print(f"runtime error in {r.check_id}: {r.error}", file=sys.stderr)
    return exit_code(reports)


if __name__ == "__main__":
    sys.exit(main())
