"""JSON experiment configs: parsing, validation, printing and name resolution.

Top-level keys (all optional except ``kind``)::

    kind        "dist" | "verify:<check-id>" | "experiment:<case-id>" | "sweep"
    space       {"dim": n, "norm": "l2" | "linf"}      default space for sets
    sets        name -> set definition
    functions   name -> function definition
    mappings    name -> mapping definition
    radii       {"rho", "rho_bar", "rho_hat", "rho_star"}
    tolerances  {"tau", "h", "vstep"}
    checks      list of check entries
    output      {"path": str | null, "format": "csv" | "json"}
    seed        integer

Set definitions: ``{"points": [[...], ...]}``, ``{"interval": [a, b], "step": h}``,
``{"segment": [p, q], "step": h}`` or ``{"box": [[lo, hi], ...], "step": h,
"where": expr}`` (grid nodes where expr <= 0).  Any of them may carry its own
``"space"``.

Function definitions: ``{"expr": expr, "box": [[lo, hi], ...], "step": h}`` on
a grid, or ``{"piecewise_linear": {"breakpoints": [...], "slopes": [...],
"offset": c}}`` for a convex piecewise-linear function of one variable.

Mapping definitions on ``{"box": ..., "step": ...}``: ``{"value": expr}``
(single-valued), ``{"lower": expr, "upper": expr, "vstep": v}`` (interval
valued), or ``{"affine": {"A": [[...]], "offsets": [[...]]}}`` for a set-valued
map x -> {A x + b_j}.

Check entries: ``{"verify": id, "args": {...}}``, ``{"verify": id, "random": n}``,
``{"experiment": id}`` or ``{"dist": [A, B]}``.  Under a ``verify:<id>``,
``experiment:<id>`` or ``dist`` kind the key naming the check may be left out.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..approx_schemes import ConditioningFn, ConstrainedProblem
from ..epigraph import GriddedFunction
from ..errors import InputError
from ..experiments import CASES
from ..metric_core import FiniteSet, MetricSpace, RadiusBundle, lattice, sample_segment
from ..set_calculus import affine_set_map
from ..setvalued import GriddedMapping, PLConvex
from .expr import ExprError, compile_expr, max_var, parse_expr

KEYS = ("kind", "space", "sets", "functions", "mappings", "radii", "tolerances", "checks",
        "output", "seed")
ENTRY_KEYS = ("verify", "args", "random", "experiment", "dist", "rho")
DEFAULT_TOLERANCES = {"tau": 1e-9, "h": 0.01, "vstep": 0.01}


@dataclass
class Diagnostic:
    message: str
    line: int = 1
    col: int = 1

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class ConfigError(Exception):
    def __init__(self, diagnostics):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass
class ExperimentConfig:
    kind: str
    space: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    mappings: dict = field(default_factory=dict)
    radii: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def mode(self):
        return self.kind.split(":", 1)[0]

    @property
    def target(self):
        return self.kind.split(":", 1)[1] if ":" in self.kind else None

    def tolerance(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def radius_bundle(self):
        if "rho" not in self.radii:
            return None
        return RadiusBundle(**{k: self.radii[k] for k in ("rho", "rho_bar", "rho_hat", "rho_star")
                               if k in self.radii})

    def entries(self):
        """Check entries normalised to ('verify' | 'experiment' | 'dist', payload dict)."""
        out = []
        for e in self.checks:
            if "experiment" in e or self.mode == "experiment" and "verify" not in e:
                out.append(("experiment", {"id": e.get("experiment", self.target)}))
            elif "dist" in e or self.mode == "dist":
                out.append(("dist", {"pair": e.get("dist", e.get("pair")), "rho": e.get("rho")}))
            else:
                out.append(("verify", {"id": e.get("verify", self.target), "args": e.get("args"),
                                       "random": e.get("random")}))
        return out

    def to_dict(self):
        d = {k: getattr(self, k) for k in KEYS}
        return {k: v for k, v in d.items() if v not in ({}, None) or k in ("kind", "checks")}


def _position(text, offset):
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _locate(text, token, after=0):
    """Line/column of the first JSON string literal equal to ``token``."""
    if text is None:
        return 1, 1
    i = text.find(json.dumps(token), after)
    if i < 0:
        i = text.find(json.dumps(token))
    return _position(text, i) if i >= 0 else (1, 1)


def parse_config(text):
    """ExperimentConfig from JSON text, or ConfigError with positioned diagnostics."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([Diagnostic(f"invalid JSON: {e.msg}", e.lineno, e.colno)])
    if not isinstance(raw, dict):
        raise ConfigError([Diagnostic("config must be a JSON object")])
    diags = []
    unknown = [k for k in raw if k not in KEYS]
    for k in unknown:
        diags.append(Diagnostic(f"unknown key {k!r}", *_locate(text, k)))
    if "kind" not in raw:
        diags.append(Diagnostic("missing key 'kind'"))
    if diags:
        raise ConfigError(diags)
    cfg = ExperimentConfig(**{k: raw[k] for k in KEYS if k in raw})
    validate(cfg, text)
    return cfg


def print_config(cfg):
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _check_expr(src, where, text, diags):
    if not isinstance(src, str):
        diags.append(Diagnostic(f"{where}: expression must be a string", *_locate(text, where)))
        return None
    try:
        return parse_expr(src)
    except ExprError as e:
        line, col = _locate(text, src)
        diags.append(Diagnostic(f"{where}: {e.message}", line, col + e.col))
        return None


def validate(cfg, text=None):
    from .registry import CHECKS

    diags = []

    def err(msg, token=None):
        diags.append(Diagnostic(msg, *_locate(text, token if token is not None else msg)))

    mode, target = cfg.mode, cfg.target
    if mode not in ("dist", "verify", "experiment", "sweep"):
        err(f"unknown kind {cfg.kind!r}", cfg.kind)
    if mode == "verify" and target not in CHECKS:
        err(f"unknown check-id {target!r}", cfg.kind)
    if mode == "experiment" and target not in CASES:
        err(f"unknown case-id {target!r}", cfg.kind)
    if not isinstance(cfg.checks, list):
        err("checks must be a list", "checks")
        raise ConfigError(diags)
    for name, defs in (("sets", cfg.sets), ("functions", cfg.functions),
                       ("mappings", cfg.mappings), ("radii", cfg.radii),
                       ("tolerances", cfg.tolerances), ("output", cfg.output), ("space", cfg.space)):
        if not isinstance(defs, dict):
            err(f"{name} must be an object", name)
    if diags:
        raise ConfigError(diags)
    for k in cfg.tolerances:
        if k not in DEFAULT_TOLERANCES:
            err(f"unknown tolerance {k!r}", k)
    for k in cfg.radii:
        if k not in ("rho", "rho_bar", "rho_hat", "rho_star"):
            err(f"unknown radius {k!r}", k)
    fmt = cfg.output.get("format", "csv")
    if fmt not in ("csv", "json"):
        err(f"unknown output format {fmt!r}", fmt)
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        err("seed must be a nonnegative integer", "seed")

    for name, d in cfg.functions.items():
        if not isinstance(d, dict):
            err(f"function {name!r} must be an object", name)
        elif "expr" in d:
            _check_expr(d["expr"], f"function {name!r}", text, diags)
            if "box" not in d or "step" not in d:
                err(f"function {name!r} needs box and step", name)
        elif "piecewise_linear" not in d:
            err(f"function {name!r} needs expr or piecewise_linear", name)
    for name, d in cfg.mappings.items():
        if not isinstance(d, dict):
            err(f"mapping {name!r} must be an object", name)
            continue
        for key in ("value", "lower", "upper"):
            if key in d:
                _check_expr(d[key], f"mapping {name!r}", text, diags)
        if not any(k in d for k in ("value", "lower", "affine")):
            err(f"mapping {name!r} needs value, lower/upper or affine", name)
    for name, d in cfg.sets.items():
        if isinstance(d, dict) and "where" in d:
            _check_expr(d["where"], f"set {name!r}", text, diags)
        elif not isinstance(d, (dict, list)):
            err(f"set {name!r} must be an object or a point list", name)

    for e in cfg.checks:
        if not isinstance(e, dict):
            err("check entries must be objects", "checks")
            raise ConfigError(diags)
        for k in e:
            if k not in ENTRY_KEYS:
                err(f"unknown check entry key {k!r}", k)
    names = {"set": cfg.sets, "function": cfg.functions, "mapping": cfg.mappings}
    for kind, entry in cfg.entries():
        if kind == "experiment":
            if entry["id"] not in CASES:
                err(f"unknown case-id {entry['id']!r}", entry["id"])
        elif kind == "dist":
            pair = entry["pair"]
            if not (isinstance(pair, list) and len(pair) == 2):
                err("dist entry needs a pair of names", "dist")
                continue
            for n in pair:
                if n not in cfg.sets and n not in cfg.functions:
                    err(f"unresolved name {n!r}", n)
            if entry["rho"] is None and "rho" not in cfg.radii:
                err("dist needs rho (in the entry or in radii)", "dist")
        else:
            cid = entry["id"]
            if cid not in CHECKS:
                err(f"unknown check-id {cid!r}", cid)
                continue
            if entry["args"] is None:
                continue
            if not isinstance(entry["args"], dict):
                err(f"args of {cid!r} must be an object", cid)
                continue
            diags.extend(CHECKS[cid].validate(entry["args"], names, cfg, text))
    if diags:
        raise ConfigError(diags)
    return cfg


# ---------------------------------------------------------------------------
# resolution
# ---------------------------------------------------------------------------

def _space(d, fallback=None):
    if not d:
        return fallback
    return MetricSpace(int(d.get("dim", 1)), d.get("norm", "l2"))


def _grid_nodes(box, step):
    axes = [lattice(lo, hi, step) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_set(name, d, default_space):
    if isinstance(d, list):
        d = {"points": d}
    space = _space(d.get("space"), None)
    if "points" in d:
        P = np.asarray(d["points"], float)
        P = P.reshape(-1, 1) if P.ndim == 1 else P.reshape(len(P), -1)
    elif "interval" in d:
        a, b = d["interval"]
        P = lattice(a, b, d["step"]).reshape(-1, 1)
    elif "segment" in d:
        p, q = d["segment"]
        P = sample_segment(p, q, d["step"])
    elif "box" in d:
        P = _grid_nodes(d["box"], d["step"])
        if "where" in d:
            P = P[compile_expr(d["where"])(P) <= 0]
    else:
        raise InputError(f"set {name!r}: unknown definition")
    dim = P.shape[1] if P.size else int((space or default_space or MetricSpace(1)).dim)
    if space is None:
        space = default_space if default_space is not None and default_space.dim == dim \
            else MetricSpace.euclidean(dim)
    return FiniteSet(space, P.reshape(-1, dim), name)


def build_function(name, d, default_space):
    if "piecewise_linear" in d:
        pl = d["piecewise_linear"]
        return PLConvex(tuple(pl.get("breakpoints", ())), tuple(pl["slopes"]),
                        float(pl.get("offset", 0.0)))
    node = parse_expr(d["expr"])
    box = d["box"]
    if max_var(node) > len(box):
        raise InputError(f"function {name!r} uses x_{max_var(node)} on a {len(box)}-D box")
    space = _space(d.get("space"), None)
    if space is None:
        space = default_space if default_space is not None and default_space.dim == len(box) \
            else MetricSpace.euclidean(len(box))
    ev = compile_expr(d["expr"])
    f = GriddedFunction.from_callable(ev, box, d["step"], space, name)
    if ev.flags:
        f.meta["flags"] = sorted(ev.flags)
    return f


def build_mapping(name, d, default_space):
    if "affine" in d:
        A = np.atleast_2d(np.asarray(d["affine"]["A"], float))
        b = np.asarray(d["affine"].get("offsets", [[0.0] * A.shape[0]]), float)
        space = _space(d.get("space"), None) or MetricSpace(A.shape[1], "linf")
        return affine_set_map(A, b.reshape(-1, A.shape[0]), space, name=name)
    X = _grid_nodes(d["box"], d["step"])
    dom = MetricSpace.euclidean(X.shape[1])
    cod = MetricSpace.euclidean(1)
    if "value" in d:
        v = compile_expr(d["value"])(X)
        vals = [np.array([[y]]) if np.isfinite(y) else np.zeros((0, 1)) for y in v]
    else:
        lo, hi = compile_expr(d["lower"])(X), compile_expr(d["upper"])(X)
        vstep = float(d.get("vstep", d["step"]))
        vals = [lattice(a, b, vstep).reshape(-1, 1) if np.isfinite(a) and np.isfinite(b) and a <= b
                else np.zeros((0, 1)) for a, b in zip(lo, hi)]
    return GriddedMapping(dom, cod, X, tuple(vals), name, float(d["step"]))


class Resolver:
    """Builds named objects on first use and caches them."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.space = _space(cfg.space, None)
        self._cache = {}

    def get(self, kind, name):
        key = (kind, name)
        if key not in self._cache:
            if kind == "set":
                obj = build_set(name, self.cfg.sets[name], self.space)
            elif kind == "function":
                obj = build_function(name, self.cfg.functions[name], self.space)
            else:
                obj = build_mapping(name, self.cfg.mappings[name], self.space)
            self._cache[key] = obj
        return self._cache[key]

    def problem(self, spec):
        f0 = self.get("function", spec["objective"])
        cons = tuple(self.get("function", c) for c in spec["constraints"])
        return ConstrainedProblem(f0, cons)

    def psi(self, spec):
        if isinstance(spec, (int, float)):
            return ConditioningFn.linear(float(spec))
        if "power" in spec:
            beta, scale = spec["power"]
            return ConditioningFn.power(beta, scale)
        if "linear" in spec:
            return ConditioningFn.linear(spec["linear"])
        return ConditioningFn.table(spec["knots"], spec["values"])


def config_for(kind, **kw):
    """Programmatic config with the given kind; used for argument-free CLI runs."""
    cfg = ExperimentConfig(kind, **kw)
    validate(cfg)
    return cfg


