import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from truncdist.cli.config import (ConfigError, ExperimentConfig, Resolver, parse_config,
                                  print_config, validate)
from truncdist.cli.expr import Bin, Call, ExprError, Num, Var, compile_expr, format_expr, parse_expr
from truncdist.cli.main import COLUMNS, bundled, bundled_names, main
from truncdist.cli.registry import CHECKS


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2) if not isinstance(obj, str) else obj)
    return str(p)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# expressions

def test_parse_against_hand_built_ast():
    got = parse_expr("max(abs(x_1), pow(x_2, 2))")
    want = Call("max", (Call("abs", (Var(1),)), Call("pow", (Var(2), Num(2.0)))))
    assert got == want


def test_precedence_and_associativity():
    assert parse_expr("1 - 2 - 3") == Bin("-", Bin("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse_expr("1 + 2 * 3") == Bin("+", Num(1.0), Bin("*", Num(2.0), Num(3.0)))
    assert compile_expr("-x_1 * 2")(np.array([[1.5]]))[0] == -3.0
    assert compile_expr("8 / 2 / 2")(np.zeros((1, 1)))[0] == 2.0


@pytest.mark.parametrize("src", ["max(abs(x_1), pow(x_2, 2))", "x_1 - (x_2 - 1)", "-(x_1 + 2) * 3",
                                 "indicator(-1, 0.5) + x_1 / (x_2 * 2)", "pow(x_1, -0.5)"])
def test_printer_round_trip(src):
    node = parse_expr(src)
    assert parse_expr(format_expr(node)) == node


def test_extended_arithmetic_and_flags():
    ev = compile_expr("1 / x_1")
    out = ev(np.array([[0.0], [2.0]]))
    assert out.tolist() == [np.inf, 0.5] and "division_by_zero" in ev.flags
    assert compile_expr("indicator(0, 1)")(np.array([[0.5], [2.0]])).tolist() == [0.0, np.inf]
    assert compile_expr("inf - inf")(np.zeros((1, 1)))[0] == np.inf
    assert compile_expr("0 * inf")(np.zeros((1, 1)))[0] == 0.0


@pytest.mark.parametrize("src,col", [("max(x_1)", 8), ("x_1 +", 6), ("foo(x_1)", 1), ("x_0", 1)])
def test_malformed_expressions(src, col):
    with pytest.raises(ExprError) as e:
        parse_expr(src)
    assert e.value.col == col


# configs

@pytest.mark.parametrize("name", bundled_names())
def test_bundled_configs_round_trip(name):
    cfg = parse_config(bundled(name).read_text())
    assert parse_config(print_config(cfg)) == cfg


def test_minimal_dist_parses():
    cfg = parse_config(bundled("minimal-dist").read_text())
    assert cfg.kind == "dist" and cfg.radius_bundle().rho == 1.0


def test_unresolved_name_is_diagnosed():
    text = json.dumps({"kind": "verify:union", "sets": {"A": [[0.0]]}, "radii": {"rho": 1.0},
                       "checks": [{"args": {"Cs": ["A"], "Ds": ["D7"]}}]}, indent=2)
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    msgs = [str(d) for d in e.value.diagnostics]
    assert any("'D7'" in m for m in msgs)
    d = next(d for d in e.value.diagnostics if "D7" in d.message)
    assert text.splitlines()[d.line - 1][d.col - 1:].startswith('"D7"')


def test_unknown_check_and_bad_expression_are_diagnosed():
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"kind": "verify:nope"}))
    text = json.dumps({"kind": "dist", "functions": {"f": {"expr": "max(x_1", "box": [[0, 1]],
                                                           "step": 0.1}}})
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert "expected" in e.value.diagnostics[0].message or "unexpected" in e.value.diagnostics[0].message


def test_invalid_json_has_position():
    with pytest.raises(ConfigError) as e:
        parse_config('{"kind": "dist",\n  "sets": }')
    assert e.value.diagnostics[0].line == 2


def test_resolver_builds_objects():
    cfg = validate(ExperimentConfig("dist", sets={
        "I": {"interval": [0, 1], "step": 0.25},
        "D": {"box": [[-1, 1], [-1, 1]], "step": 0.5, "where": "x_1 * x_1 + x_2 * x_2 - 1"}}))
    r = Resolver(cfg)
    assert r.get("set", "I").points.ravel().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    axis = [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert len(r.get("set", "D")) == sum(a * a + b * b <= 1 for a in axis for b in axis)
    assert r.get("set", "I") is r.get("set", "I")


def test_every_check_is_registered():
    assert len(CHECKS) == 22
    assert {"triangle", "hull", "kenmochi-oracle", "geneq", "kkt"} <= set(CHECKS)


# the runner

def test_exit_zero_and_columns(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--config", "bundled:minimal-dist", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    (row,) = rows(text)
    assert row["status"] == "pass" and row["seed"] == "0"


def test_exit_one_on_violation(tmp_path, capsys):
    # a negative tolerance turns the exact equality row into a violation
    code = main(["run", "--config", "bundled:minimal-dist", "--tolerance", "-1"])
    assert code == 1
    assert rows(capsys.readouterr().out)[0]["status"] == "fail"


def test_exit_two_on_runtime_error(tmp_path, capsys):
    path = write(tmp_path, {"kind": "verify:scaling", "sets": {"C": [[1.0]]},
                            "radii": {"rho": 1.0},
                            "checks": [{"args": {"C": "C", "D": "C", "lam": 0, "mu": 1}}]})
    assert main(["run", "--config", path]) == 2
    captured = capsys.readouterr()
    (row,) = rows(captured.out)
    assert row["status"] == "error" and row["lhs"] == ""
    assert "runtime error" in captured.err


def test_exit_three_on_config_errors(tmp_path, capsys):
    assert main(["verify", "no-such-check"]) == 3
    assert main(["run", "--config", write(tmp_path, "{")]) == 3
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 3
    assert main(["bogus"]) == 3
    assert "config error" in capsys.readouterr().err


def test_empty_check_list(tmp_path, capsys):
    path = write(tmp_path, {"kind": "dist", "checks": []})
    assert main(["run", "--config", path]) == 0
    assert capsys.readouterr().out == ",".join(COLUMNS) + "\n"


def test_dist_subcommand(capsys):
    assert main(["dist", "A", "B", "--config", "bundled:minimal-dist", "--rho", "2"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert row["check_id"] == "dist:A,B" and float(row["lhs"]) == pytest.approx(0.1)


def test_verify_random_embeds_seed(capsys):
    assert main(["verify", "union", "--count", "3", "--seed", "7"]) == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 3 and {r["seed"] for r in out} == {"7"}


def test_json_mirror(capsys):
    assert main(["run", "--config", "bundled:minimal-dist", "--format", "json"]) == 0
    (row,) = json.loads(capsys.readouterr().out)
    assert row["status"] == "pass" and row["details"]["rho"] == 1.0


def test_kkt_sweep_table(capsys):
    assert main(["sweep", "kkt-sweep"]) == 0
    table = rows(capsys.readouterr().out)
    deltas = [float(r["delta"]) for r in table]
    bounds = [float(r["rhs"]) for r in table]
    assert deltas == sorted(deltas) and bounds == sorted(bounds)


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["run", "--config", "bundled:random-checks", "--seed", "3", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_list_checks(capsys):
    assert main(["list-checks"]) == 0
    out = capsys.readouterr().out
    assert "check       triangle" in out and "bundled:paper-counterexamples" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "truncdist.cli.main", "list-checks"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "kenmochi-oracle" in proc.stdout
