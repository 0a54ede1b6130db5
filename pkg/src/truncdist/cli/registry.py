"""Named checks for ``verify``: argument schema, config runner, random fallback."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import random_suites as rs
from .. import set_calculus as sc
from ..approx_schemes import (ConditioningFn, ConstrainedProblem, check_penalty_bound,
                              check_softening_bound, solve_feasibility_approx)
from ..epigraph import (GriddedFunction, check_level_set_estimate, check_solution_estimates,
                        check_supnorm_bound, epi_oracle_dl, kenmochi_dl,
                        kenmochi_excess)
from ..metric_core import RadiusBundle, finite_set, sample_interval
from ..report import BoundReport
from ..setvalued import (GriddedMapping, NearSolutionQuery, PLConvex, check_geneq_bound,
                         check_kkt_bound, check_sum_mappings, composite_stationarity_bound,
                         dc_mapping_bound, normal_cone_graph)
from .expr import compile_expr

# argument kinds: set, sets, function, functions, mapping, setmap, pl (piecewise-linear
# function), expr, problem, psi, float, vector, rho (defaults to radii.rho), radii
_RADII = ("rho", "rho_bar", "rho_hat", "rho_star")


@dataclass
class Check:
    check_id: str
    params: dict          # name -> (kind, required)
    run: object           # run(args, cfg) -> BoundReport or list of them
    random: object        # random(rng, cfg) -> BoundReport
    help: str = ""

    def validate(self, args, names, cfg, text):
        from .config import Diagnostic, _locate

        diags = []

        def err(msg, token):
            diags.append(Diagnostic(msg, *_locate(text, token)))

        for key in args:
            if key not in self.params:
                err(f"{self.check_id}: unknown argument {key!r}", key)
        for key, (kind, required) in self.params.items():
            if key not in args:
                if kind == "rho" and required and "rho" not in cfg.radii:
                    err(f"{self.check_id}: needs {key} (in args or radii)", self.check_id)
                elif kind == "radii" and "rho" not in cfg.radii:
                    err(f"{self.check_id}: needs radii.rho", self.check_id)
                elif required and kind not in ("rho", "radii"):
                    err(f"{self.check_id}: missing argument {key!r}", self.check_id)
                continue
            value = args[key]
            pool = {"set": "set", "sets": "set", "function": "function",
                    "functions": "function", "pl": "function", "mapping": "mapping",
                    "setmap": "mapping"}.get(kind)
            refs = []
            if pool:
                refs = value if isinstance(value, list) else [value]
            elif kind == "problem":
                if not isinstance(value, dict) or "objective" not in value:
                    err(f"{self.check_id}: {key} needs objective and constraints", key)
                    continue
                refs = [value["objective"]] + list(value.get("constraints", []))
                pool = "function"
            for r in refs:
                if not isinstance(r, str) or r not in names[pool]:
                    err(f"unresolved name {r!r}", r)
        return diags


def _resolve(check, args, cfg, resolver):
    out = {}
    for key, (kind, required) in check.params.items():
        if key not in args:
            if kind == "rho" and required:
                out[key] = float(cfg.radii["rho"])
            elif kind == "radii":
                out[key] = cfg.radius_bundle()
            continue
        v = args[key]
        if kind in ("set", "function", "pl", "mapping", "setmap"):
            pool = {"set": "set", "mapping": "mapping", "setmap": "mapping"}.get(kind, "function")
            out[key] = resolver.get(pool, v)
        elif kind in ("sets", "functions"):
            out[key] = [resolver.get(kind[:-1], n) for n in v]
        elif kind == "problem":
            out[key] = resolver.problem(v)
        elif kind == "psi":
            out[key] = resolver.psi(v)
        elif kind == "expr":
            ev = compile_expr(v)
            out[key] = lambda X, ev=ev: ev(np.asarray(X, float).reshape(len(X), -1))
        elif kind == "radii":
            out[key] = RadiusBundle(**{k: v[k] for k in _RADII if k in v})
        elif kind == "vector":
            out[key] = tuple(np.atleast_1d(np.asarray(v, float)).tolist())
        else:
            out[key] = float(v)
    return out


def _p(**kinds):
    """Parameter table; a trailing '?' marks an optional argument."""
    return {k: (v.rstrip("?"), not v.endswith("?")) for k, v in kinds.items()}


# ---------------------------------------------------------------------------
# runners that need more than a direct call
# ---------------------------------------------------------------------------

def _oracle_report(f, g, rho, cfg):
    vstep = cfg.tolerance("vstep")
    tol = 2 * max(vstep, cfg.tolerance("h")) + cfg.tolerance("tau")
    return BoundReport("kenmochi-oracle", kenmochi_dl(f, g, rho), epi_oracle_dl(f, g, rho, vstep),
                       relation="eq", tol=tol, details={"vstep": vstep})


def _feasibility(a, cfg):
    x1, rep = solve_feasibility_approx(a["Cs"], a["Ds"], a["lam"], a["psi"], a["rho"])
    rep.check_id = "feasibility"
    return rep


def _geneq(a, cfg):
    q = NearSolutionQuery(a["y_star"], a["eps"], a["rho"], a.get("delta"))
    return check_geneq_bound(a["S"], a["T"], q, tol=cfg.tolerance("tau"))


def _composite(a, cfg):
    return composite_stationarity_bound(a["phi"], a["psi"], a["F"], a["G"], a["rho"],
                                        a.get("step", 0.1))


# ---------------------------------------------------------------------------
# random fallbacks
# ---------------------------------------------------------------------------

def _calculus(check_id):
    return lambda rng, cfg: rs.CALCULUS[check_id](rng)


def _random_pair(rng, h=0.02):
    f = rs.random_piecewise_quadratic(rng, h=h)
    if rng.random() < 0.7:
        g = f.with_values(f.values + rng.uniform(-0.2, 0.2, len(f.values)), "g")
    else:
        g = rs.random_piecewise_quadratic(rng, h=h)
    return f, g


def _random_oracle(rng, cfg):
    f, g = _random_pair(rng)
    return _oracle_report(f, g, float(rng.uniform(0.3, 2.0)), cfg)


def _random_bowl_pair(rng, h=0.02):
    """Quadratic bowl with its minimum near the origin and a nearby perturbation."""
    a, c, b = rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)
    box = [[-2.0, 2.0]]
    f = GriddedFunction.from_callable(lambda x: a * (x - c) ** 2 + b, box, h, name="f")
    noise = rng.uniform(-0.05, 0.05, len(f.values)) + rng.uniform(-0.1, 0.1)
    return f, f.with_values(f.values + noise, "g"), b


def _random_solutions(rng, cfg):
    f, g, _ = _random_bowl_pair(rng)
    rho = float(rng.uniform(1, 2))
    eps = float(rng.uniform(0, 0.3))
    delta = eps + 2 * kenmochi_dl(f, g, rho) + float(rng.uniform(0.01, 0.3))
    return check_solution_estimates(f, g, eps, delta, rho)


def _random_levels(rng, cfg):
    f, g, b = _random_bowl_pair(rng)
    rho = float(rng.uniform(1, 2))
    delta = b + float(rng.uniform(0, 0.5))
    eps = delta + kenmochi_excess(g, f, rho) + float(rng.uniform(0.01, 0.3))
    return check_level_set_estimate(f, g, delta, eps, rho)


def _random_supnorm(rng, cfg):
    f, g = _random_pair(rng)
    return check_supnorm_bound(f, g, float(rng.uniform(0.3, 2)))


def _random_feasibility(rng, cfg):
    eps = float(rng.uniform(0.02, 0.2))
    delta = 0.25
    C1 = finite_set([0.0, 1.0])
    x1, rep = solve_feasibility_approx(
        [C1, sample_interval(0.0, 1 - delta, eps / 10)],
        [C1, sample_interval(eps, 1 - delta, eps / 10)],
        eps ** -0.5, ConditioningFn.linear(delta), 1.0)
    rep.check_id = "feasibility"
    return rep


def _random_problem_pair(rng):
    delta = float(rng.uniform(0.01, 0.1))
    box, h = [[-2.0, 2.0]], 0.01
    f0 = GriddedFunction.from_callable(lambda x: x, box, h, name="f0")
    f1 = GriddedFunction.from_callable(lambda x: -x, box, h, name="f1")
    g1 = GriddedFunction.from_callable(lambda x: -x + delta, box, h, name="g1")
    return ConstrainedProblem(f0, (f1,)), ConstrainedProblem(f0, (g1,)), delta


def _random_softening(rng, cfg):
    p, q, delta = _random_problem_pair(rng)
    return check_softening_bound(p, q, delta ** -0.5, ConditioningFn.power(1.0),
                                 RadiusBundle(0.3), y_step=0.01)


def _random_penalty(rng, cfg):
    p, q, delta = _random_problem_pair(rng)
    return check_penalty_bound(p, q, delta ** -0.5, ConditioningFn.power(1.0), RadiusBundle(0.3))


def _random_geneq(rng, cfg):
    return next(rs.suite_geneq(1, int(rng.integers(2 ** 32))))


def _random_sum_mappings(rng, cfg):
    h = 0.05
    xs = np.round(np.arange(-1.0, 2.0 + h / 2, h), 12)
    sp = finite_set([0.0]).space
    a, b = rng.uniform(0.5, 2), rng.uniform(-0.2, 0.2)
    S1 = GriddedMapping(sp, sp, xs, [[a * x] for x in xs], "S1")
    T1 = GriddedMapping(sp, sp, xs, [[a * x + b] for x in xs], "T1")
    N = normal_cone_graph((0.0, 1.0), 10.0, h, (-1.0, 2.0))
    s = float(np.round(rng.uniform(0, 0.2) / h) * h)
    N2 = normal_cone_graph((s, 1.0), 10.0, h, (-1.0, 2.0))
    return check_sum_mappings(S1, T1, N, N2, RadiusBundle(1.0))


def _random_dc(rng, cfg):
    return next(rs.suite_dc(1, int(rng.integers(2 ** 32))))


def _random_kkt(rng, cfg):
    box, h = [[-2.0, 2.0]], 0.05
    d = float(rng.uniform(0, 0.1))
    ones = np.ones_like

    def problem(d):
        g0 = GriddedFunction.from_callable(lambda x: x * x + d * x, box, h, name="f0")
        g1 = GriddedFunction.from_callable(lambda x: x - 1 - d, box, h, name="f1")
        return ConstrainedProblem(g0, (g1,), (lambda x: 2 * x + d, ones))

    return check_kkt_bound(problem(0.0), problem(d), 1.0)


def _random_composite(rng, cfg):
    c = float(rng.uniform(-0.1, 0.1))
    s = float(rng.uniform(-0.1, 0.1))
    return composite_stationarity_bound(
        PLConvex.abs(), PLConvex.abs(s), lambda X: X[:, 0] ** 2,
        lambda X: X[:, 0] ** 2 + c * X[:, 0], 1.0, 0.1,
        JF=lambda X: 2 * X, JG=lambda X: 2 * X + c)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

CHECKS = {c.check_id: c for c in [
    Check("triangle", _p(C1="set", C2="set", C3="set", rho="rho", rho_bar="float?"),
          lambda a, cfg: sc.check_triangle(a["C1"], a["C2"], a["C3"], a["rho"], a.get("rho_bar")),
          _calculus("triangle"), "dl through an intermediate set"),
    Check("product", _p(Cs="sets", Ds="sets", rho="rho"),
          lambda a, cfg: sc.check_product(a["Cs"], a["Ds"], a["rho"]),
          _calculus("product"), "product sets with the max-metric"),
    Check("indicator", _p(C="set", D="set", rho="rho"),
          lambda a, cfg: sc.check_indicator(a["C"], a["D"], a["rho"], cfg.tolerance("vstep")),
          _calculus("indicator"), "epigraphs of indicator functions"),
    Check("union", _p(Cs="sets", Ds="sets", rho="rho"),
          lambda a, cfg: sc.check_union(a["Cs"], a["Ds"], a["rho"]),
          _calculus("union"), "unions of sets"),
    Check("intersection-outer", _p(Cs="sets", Ds="sets", domain="set?"),
          lambda a, cfg: sc.check_intersection_outer(a["Cs"], a["Ds"], a.get("domain")),
          _calculus("intersection-outer"), "outer limits of intersections"),
    Check("hull", _p(C="set", D="set", rho="rho"),
          lambda a, cfg: sc.check_hull(a["C"], a["D"], a["rho"]),
          _calculus("hull"), "convex hulls"),
    Check("lipschitz-image", _p(S="setmap", T="setmap", C="set", D="set", radii="radii"),
          lambda a, cfg: sc.check_lipschitz_image(a["S"], a["T"], a["C"], a["D"], a["radii"]),
          _calculus("lipschitz-image"), "images under Lipschitz set-valued maps"),
    Check("sum", _p(Cs="sets", Ds="sets", rho="rho"),
          lambda a, cfg: sc.check_sum(a["Cs"], a["Ds"], a["rho"]),
          _calculus("sum"), "Minkowski sums"),
    Check("scaling", _p(C="set", D="set", lam="float", mu="float", rho="rho"),
          lambda a, cfg: sc.check_scaling(a["C"], a["D"], a["lam"], a["mu"], a["rho"]),
          _calculus("scaling"), "scalar multiples of sets"),
    Check("convex-level-sets", _p(f="function", g="function", alpha="float", beta="float",
                                  rho="rho"),
          lambda a, cfg: sc.check_convex_level_sets(a["f"], a["g"], a["alpha"], a["beta"],
                                                    a["rho"]),
          _calculus("convex-level-sets"), "level sets of convex functions"),
    Check("kenmochi-oracle", _p(f="function", g="function", rho="rho"),
          lambda a, cfg: _oracle_report(a["f"], a["g"], a["rho"], cfg),
          _random_oracle, "closed-form epigraph dl against the point-cloud computation"),
    Check("solution-estimates", _p(f="function", g="function", eps="float", delta="float",
                                   rho="rho"),
          lambda a, cfg: check_solution_estimates(a["f"], a["g"], a["eps"], a["delta"], a["rho"]),
          _random_solutions, "infima and near-minimizers"),
    Check("level-set-estimate", _p(f="function", g="function", delta="float", eps="float",
                                   rho="rho"),
          lambda a, cfg: check_level_set_estimate(a["f"], a["g"], a["delta"], a["eps"], a["rho"]),
          _random_levels, "level sets"),
    Check("supnorm-bound", _p(f="function", g="function", rho="rho"),
          lambda a, cfg: check_supnorm_bound(a["f"], a["g"], a["rho"]),
          _random_supnorm, "epigraph dl against the sup of |f - g|"),
    Check("feasibility", _p(Cs="sets", Ds="sets", lam="float", psi="psi", rho="rho"),
          _feasibility, _random_feasibility, "feasibility reformulation"),
    Check("softening", _p(p="problem", q="problem", lam="float", psi="psi", radii="radii"),
          lambda a, cfg: check_softening_bound(a["p"], a["q"], a["lam"], a["psi"], a["radii"]),
          _random_softening, "constraint softening"),
    Check("penalty", _p(p="problem", q="problem", lam="float", psi="psi", radii="radii"),
          lambda a, cfg: check_penalty_bound(a["p"], a["q"], a["lam"], a["psi"], a["radii"]),
          _random_penalty, "penalty formulation"),
    Check("geneq", _p(S="mapping", T="mapping", y_star="vector", eps="float", rho="rho",
                      delta="float?"),
          _geneq, _random_geneq, "near-solutions of generalized equations"),
    Check("sum-mappings", _p(S1="mapping", T1="mapping", S2="mapping", T2="mapping",
                             radii="radii", kappa="float?"),
          lambda a, cfg: check_sum_mappings(a["S1"], a["T1"], a["S2"], a["T2"], a["radii"],
                                            a.get("kappa")),
          _random_sum_mappings, "sums of set-valued mappings"),
    Check("dc", _p(f1="pl", f2="pl", g1="pl", g2="pl", rho="rho", step="float?"),
          lambda a, cfg: dc_mapping_bound(a["f1"], a["f2"], a["g1"], a["g2"], a["rho"],
                                          step=a.get("step", 0.05)),
          _random_dc, "difference-of-convex stationarity"),
    Check("kkt", _p(p="problem", q="problem", rho="rho"),
          lambda a, cfg: check_kkt_bound(a["p"], a["q"], a["rho"]),
          _random_kkt, "KKT systems"),
    Check("composite", _p(phi="pl", psi="pl", F="expr", G="expr", rho="rho", step="float?"),
          _composite, _random_composite, "stationarity of composite functions"),
]}


def run_check(check_id, args, cfg, resolver):
    check = CHECKS[check_id]
    out = check.run(_resolve(check, args, cfg, resolver), cfg)
    return out if isinstance(out, list) else [out]


def random_checks(check_id, count, seed, cfg):
    check = CHECKS[check_id]
    rng = np.random.default_rng([seed, sorted(CHECKS).index(check_id)])
    return [check.random(rng, cfg) for _ in range(count)]
