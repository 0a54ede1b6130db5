"""Acceptance criteria 1-7, one printed pass/fail line each (run with -s to see them)."""
import time

import numpy as np
import pytest

import oracles
from truncdist.cli.main import bundled_names, main
from truncdist.experiments import (case_one_sweep, constrained_cases, counterexamples, kkt_sweep,
                                   ratio_sweeps)
from truncdist.random_suites import CALCULUS, suite_calculus, suite_dc, suite_geneq, suite_oracle

H = 0.01


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def test_criterion_1_kenmochi_matches_epigraph_oracle():
    t0 = time.perf_counter()
    gaps = [abs(k - o) for k, o, _ in suite_oracle(500, seed=0, h=H, vstep=0.01)
            if not (k == o == np.inf)]
    elapsed = time.perf_counter() - t0
    worst = max(gaps)
    ok = worst <= 0.02 + 1e-9 and elapsed < 60
    report(1, ok, f"500 pairs, max |gap| {worst:.4g} (cap 0.02), {elapsed:.1f} s (cap 60)")
    assert ok


def test_criterion_2_calculus_suite():
    bad = {}
    for check_id in CALCULUS:
        reps = list(suite_calculus(check_id, 1000, seed=0))
        assert len(reps) == 1000
        bad[check_id] = sum(not r.passed for r in reps)
    total = sum(bad.values())
    report(2, total == 0, f"10 checkers x 1000 instances, violations {bad}")
    assert len(bad) == 10 and total == 0


def test_criterion_3_counterexamples():
    rows = {r.check_id: r for r in counterexamples(H)}
    comp, inter = rows["intersection-components"], rows["intersection-distance"]
    hull, hval = rows["hull"], rows["hull-distance"]
    sharp, strict = rows["sum-sharpness"], rows["sum-strict"]
    rays = rows["sum-two-rays"]
    amin_dl, amin_exs = rows["argmin-dl"], rows["argmin-excess"]
    gdl, gexs = rows["geneq-dl"], rows["geneq-excess"]
    checks = {
        "intersection": comp.lhs <= 0.5 + 1e-9 and abs(inter.lhs - 2.0) <= H,
        "hull": abs(hval.lhs - 1.0) <= H and hval.details["raw_dl"] == 0.0
        and hull.status == "not-applicable",
        "sum": abs(sharp.lhs - 2 * 0.3) <= 1e-9 and strict.lhs == 0.0,
        "two-rays": rays.lhs >= 0.9 * 5.0 and rays.rhs == pytest.approx(1.0),
        "argmin": amin_dl.lhs <= H and amin_exs.lhs == np.inf,
        "geneq": abs(gdl.lhs - 1.0) <= H + 1e-9 and abs(gexs.lhs - 1.0) <= H + 1e-9,
    }
    report(3, all(checks.values()), f"{checks}")
    assert all(checks.values())
    assert all(r.passed for r in rows.values())


def test_criterion_4_approximation_schemes():
    rows, table = case_one_sweep()
    bounds = [t["rhs"] for t in table]
    x_ok = all(r.lhs <= r.rhs + 1e-9 for r in rows if r.check_id.startswith("feasibility-eps"))
    mono = all(a > b for a, b in zip(bounds, bounds[1:]))
    crow, ctable = constrained_cases()
    ratios = [t["ratio"] for t in ctable]
    cases_ok = all(r.passed for r in crow) and len(ctable) == 4 and max(ratios) <= 4.0
    ok = x_ok and mono and cases_ok and all(r.passed for r in rows)
    report(4, ok, f"case I bounds {[round(b, 4) for b in bounds]}, "
                  f"softening/penalty balance ratios {[round(r, 3) for r in ratios]} (cap 4)")
    assert ok


def test_criterion_5_generalized_equations():
    reps = list(suite_geneq(500, seed=0))
    viol = sum(not r.passed for r in reps)
    rows, _ = kkt_sweep()
    byid = {r.check_id: r for r in rows}
    ident = byid["kkt-identity"].lhs
    slope = byid["kkt-slope"]
    ok = viol == 0 and ident == 0.0 and slope.lhs <= (1 + 1 * 1.0) * 1.1 and all(
        r.passed for r in rows)
    report(5, ok, f"geneq violations {viol}/500, KKT identity lhs {ident}, "
                  f"slope {slope.lhs:.4g} (cap {slope.rhs:.4g})")
    assert ok


def test_criterion_5_dc_suite():
    reps = list(suite_dc(200, seed=0))
    viol = sum(not r.passed for r in reps)
    report("5b", viol == 0, f"DC bound violations {viol}/200")
    assert viol == 0


def test_criterion_6_square_root_sweep():
    rows, table = ratio_sweeps()
    ok = True
    for kind in ("subgradient", "normal-cone"):
        vals = [t["ratio"] for t in table if t["kind"] == kind]
        ok &= max(vals) <= 2 * vals[0] and np.all(np.isfinite(vals))
    report(6, ok, "ratios " + ", ".join(f"{t['kind']}@{t['t']}={t['ratio']:.3f}" for t in table))
    assert ok and all(r.passed for r in rows)


def test_criterion_7_cli_determinism_and_runtime(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = [main(["run", "--config", "bundled:paper-counterexamples", "--seed", "0",
                   "--out", str(p)]) for p in (a, b)]
    same = a.read_bytes() == b.read_bytes()
    t0 = time.perf_counter()
    suite = {}
    for name in bundled_names():
        suite[name] = main(["run", "--config", f"bundled:{name}", "--out",
                            str(tmp_path / f"{name}.csv")])
    elapsed = time.perf_counter() - t0
    ok = codes == [0, 0] and same and elapsed < 300 and set(suite.values()) == {0}
    report(7, ok, f"byte-identical {same}, bundled suite exit codes {suite}, {elapsed:.1f} s (cap 300)")
    assert ok


def test_intersection_value_against_oracle():
    # spot check of the reproduced intersection distance with the pairwise oracle
    A = oracles.pts(np.concatenate([np.arange(-100, 1), np.arange(100, 201)]) * H)
    A2 = oracles.pts(np.concatenate([np.arange(-100, 1), np.arange(200, 301)]) * H)
    B2 = oracles.pts(np.concatenate([np.arange(-100, 1), np.arange(250, 301)]) * H)
    C = [p for p in A if any(abs(p[0] - q[0]) < 1e-9 for q in A2)]
    D = [p for p in A if any(abs(p[0] - q[0]) < 1e-9 for q in B2)]
    want = oracles.dl(C, D, 3.0)
    got = {r.check_id: r for r in counterexamples(H)}["intersection-distance"].lhs
    assert got == pytest.approx(want, abs=1e-9)
