"""Worked examples and parameter sweeps.

Every function returns a list of BoundReport rows (plus a table for the
sweeps) so that the command line tool and the test-suite share one code path.
"""
from __future__ import annotations

import math

import numpy as np

from .approx_schemes import (ConditioningFn, ConstrainedProblem, check_penalty_bound,
                             check_softening_bound, run_disjunctive_experiment,
                             solve_feasibility_approx)
from .epigraph import (GriddedFunction, HolderModulus, NodeFunction, argmin_set,
                       check_holder_sum, check_supnorm_bound, kenmochi_dl)
from .metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, excess, finite_set,
                          lattice, nearest, sample_interval, sample_segment, trunc_hausdorff)
from .report import BoundReport
from .set_calculus import (TAU, check_hull, check_sum, hull_distance, intersect_sets,
                           two_rays_counterexample)
from .setvalued import (GriddedMapping, NearSolutionQuery, PLConvex, check_geneq_bound,
                        check_kkt_bound, check_sum_mappings, composite_stationarity_bound,
                        dc_mapping_bound, normal_cone_graph, ratio_sweep_normal_cones,
                        ratio_sweep_subgradients)


# ---------------------------------------------------------------------------
# counterexamples from the set calculus
# ---------------------------------------------------------------------------

def intersection_counterexample(eps=0.5, h=0.01, rho=3.0):
    """Components within eps of each other while the intersections are 2 apart."""
    sp = MetricSpace.euclidean(1)

    def union(*pieces):
        return FiniteSet(sp, np.concatenate([lattice(a, b, h) for a, b in pieces]).reshape(-1, 1))

    C1 = D1 = union((-1, 0), (1, 2))
    C2 = union((-1, 0), (2, 3))
    D2 = union((-1, 0), (2 + eps, 3))
    comp = max(trunc_hausdorff(C1, D1, rho), trunc_hausdorff(C2, D2, rho))
    inter = trunc_hausdorff(intersect_sets([C1, C2]), intersect_sets([D1, D2]), rho)
    return [
        BoundReport("intersection-components", comp, eps, tol=TAU + h),
        BoundReport("intersection-distance", inter, 2.0, relation="eq", tol=h,
                    details={"component_dl": comp}),
    ]


def hull_counterexample(lam=2.0, rho=1.0, h=0.01):
    """Four points in the sup-norm plane whose hulls differ although the sets agree in B(rho)."""
    sp = MetricSpace.sup(2)
    C = FiniteSet(sp, lam * np.array([[-1.0, 1.0], [1.0, -1.0]]))
    D = FiniteSet(sp, lam * np.array([[1.0, 1.0], [-1.0, -1.0]]))
    rep = check_hull(C, D, rho, mode="exact")
    value, _, _ = hull_distance(C, D, rho, mode="exact")
    return [rep, BoundReport("hull-distance", value, rho, relation="eq", tol=h,
                             details={"raw_dl": trunc_hausdorff(C, D, rho)})]


def sum_examples(z=0.3, rho=10.0):
    sp = MetricSpace.euclidean(1)

    def pt(v):
        return FiniteSet(sp, [[v]])

    sharp = check_sum([pt(0.0), pt(1.0)], [pt(z), pt(1.0 + z)], rho)
    sharp.check_id = "sum-sharpness"
    sharp_eq = BoundReport("sum-sharpness-value", sharp.lhs, 2 * abs(z), relation="eq")
    strict = check_sum([pt(1.0), pt(-1.0)], [pt(2.0), pt(-2.0)], rho)
    strict.check_id = "sum-strict"
    strict_eq = BoundReport("sum-strict-value", strict.lhs, 0.0, relation="eq")
    return [sharp, sharp_eq, strict, strict_eq]


def two_rays(delta=0.1, rho=5.0):
    rep = two_rays_counterexample(delta, rho)
    gap = BoundReport("sum-two-rays-gap", rep.lhs, 0.9 * rho, relation="ge",
                      details={"componentwise_rhs": rep.rhs})
    return [rep, gap]


def argmin_counterexample(h=0.01, rho=1.0):
    """f(x) = x on x > 0 (infimum 0 not attained) against g(x) = x on x >= 0."""
    xs = lattice(0.0, 2.0, h)
    sp = MetricSpace.euclidean(1)
    f = NodeFunction(sp, xs[1:], xs[1:], "x on x>0", infimum=0.0)
    g = NodeFunction(sp, xs, xs, "x on x>=0")
    dl = kenmochi_dl(f, g, rho)
    exs = excess(argmin_set(g), argmin_set(f))
    return [BoundReport("argmin-dl", dl, h, tol=TAU),
            BoundReport("argmin-excess", exs, INF, relation="eq")]


def geneq_sharpness(h=0.01, extent=5.0, rho=2.0):
    sp = MetricSpace.euclidean(1)
    xs, xt = lattice(0.0, 1.0, h), lattice(1.0, 2.0, h)
    S = GriddedMapping(sp, sp, xs, [lattice(x, extent, h) for x in xs], "S", h, extent)
    T = GriddedMapping(sp, sp, xt, [lattice(1 + h, extent, h) for _ in xt], "T", h, extent)
    Tc = GriddedMapping(sp, sp, xt, [lattice(1.0, extent, h) for _ in xt], "T closed", h, extent)
    rep = check_geneq_bound(S, T, NearSolutionQuery(0.0, 0.0, rho, 1 + h))
    closed = check_geneq_bound(S, Tc, NearSolutionQuery(0.0, 0.0, rho, 1.0))
    closed.check_id = "geneq-closed"
    dl = trunc_hausdorff(S.graph(), T.graph(), rho)
    return [rep, closed,
            BoundReport("geneq-dl", dl, 1.0, relation="eq", tol=h + TAU),
            BoundReport("geneq-excess", rep.lhs, 1.0, relation="eq", tol=h + TAU),
            BoundReport("geneq-closed-excess", closed.lhs, 1.0, relation="eq", tol=h + TAU)]


def counterexamples(h=0.01):
    rows = []
    rows += intersection_counterexample(h=h)
    rows += hull_counterexample(h=h)
    rows += sum_examples()
    rows += two_rays()
    rows += argmin_counterexample(h=h)
    rows += geneq_sharpness(h=h)
    return rows


# ---------------------------------------------------------------------------
# Case I: feasibility
# ---------------------------------------------------------------------------

def case_one_sweep(eps_list=(0.1, 0.05, 0.025), delta=0.25, rho=1.0):
    """C1 = D1 = {0, 1}, C2 = [0, 1 - delta], D2 = [eps, 1 - delta]."""
    rows, table = [], []
    psi = ConditioningFn.linear(delta)
    for eps in eps_list:
        h = eps / 10
        C1 = finite_set([0.0, 1.0])
        C2 = sample_interval(0.0, 1 - delta, h)
        D2 = sample_interval(eps, 1 - delta, h)
        lam = eps ** -0.5
        x1, rep = solve_feasibility_approx([C1, C2], [C1, D2], lam, psi, rho)
        rep.check_id = f"feasibility-eps={eps:g}"
        rows.append(rep)
        table.append({"eps": eps, "lambda": lam, "x1": float(x1[0]), "lhs": rep.lhs,
                      "rhs": rep.rhs})
    mono = all(a["rhs"] > b["rhs"] for a, b in zip(table, table[1:]))
    rows.append(BoundReport("feasibility-monotone", float(not mono), 0.0, relation="eq",
                            details={"bounds": [t["rhs"] for t in table]}))
    return rows, table


def poor_conditioning(alphas=(2, 4, 8), eps=0.05, h=0.01, rho=1.0):
    """C1 = {x2 <= 0}, C2 = {|x1|^alpha <= x2}; relaxing C1 by eps moves solutions by eps^(1/alpha)."""
    sp = MetricSpace.euclidean(2)
    axis = lattice(-1.0, 1.0, h)
    G = np.array([[a, b] for a in axis for b in axis])
    rows, table = [], []
    for alpha in alphas:
        C1 = FiniteSet(sp, G[G[:, 1] <= 1e-12])
        D1 = FiniteSet(sp, G[G[:, 1] <= eps + 1e-12])
        C2 = FiniteSet(sp, G[np.abs(G[:, 0]) ** alpha <= G[:, 1] + 1e-12])
        inter = intersect_sets([C1, C2])
        # smallest scale making psi(g) = scale * g^(1/alpha) a valid conditioning function
        d_int = nearest(sp, C1.points, inter.points)
        d2 = nearest(sp, C1.points, C2.points)
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(d_int > 0, d_int / np.maximum(d2, 1e-300) ** (1.0 / alpha), 0.0)
        scale = float(need.max()) * (1 + 1e-9) if len(need) else 1.0
        psi = ConditioningFn.power(1.0 / alpha, max(scale, 1e-12))
        x1, rep = solve_feasibility_approx([C1, C2], [D1, C2], 1.0 / math.sqrt(eps), psi, rho)
        rep.check_id = f"poor-conditioning-alpha={alpha}"
        worst = rep.details["worst_minimizer_dist"]
        rows.append(rep)
        table.append({"alpha": alpha, "eps": eps, "worst_error": worst,
                      "predicted": eps ** (1.0 / alpha), "psi_scale": scale,
                      "applicable": rep.applicable})
    return rows, table


# ---------------------------------------------------------------------------
# Cases II and III
# ---------------------------------------------------------------------------

def _instance_1d(delta, h=0.01):
    box = [[-2.0, 2.0]]
    f0 = GriddedFunction.from_callable(lambda x: x, box, h, name="f0")
    f1 = GriddedFunction.from_callable(lambda x: -x, box, h, name="f1")
    g1 = GriddedFunction.from_callable(lambda x: -x + delta, box, h, name="g1")
    return ConstrainedProblem(f0, (f1,)), ConstrainedProblem(f0, (g1,))


def _instance_2d(delta, h=0.05):
    sp = MetricSpace.sup(2)
    box = [[-1.0, 1.0], [-1.0, 1.0]]
    f0 = GriddedFunction.from_callable(lambda X: X[:, 0] + 0.5 * X[:, 1], box, h, sp, "f0")
    f1 = GriddedFunction.from_callable(lambda X: np.abs(X[:, 0] - X[:, 1]), box, h, sp, "f1")
    g1 = f1.with_values(f1.values + delta, "g1")
    return ConstrainedProblem(f0, (f1,)), ConstrainedProblem(f0, (g1,))


def constrained_cases(delta=0.05, rho_1d=0.3, rho_2d=0.3):
    """Softening and penalty on a 1-D and a 2-D instance with lambda = delta^(-1/2)."""
    lam = delta ** -0.5
    psi = ConditioningFn.power(1.0)
    rows, table = [], []
    for dim, (p, q), rho, ystep in ((1, _instance_1d(delta), rho_1d, 0.01),
                                    (2, _instance_2d(delta), rho_2d, 0.05)):
        for name, fn in (("softening", check_softening_bound), ("penalty", check_penalty_bound)):
            kw = {"y_step": ystep} if name == "softening" else {}
            rep = fn(p, q, lam, psi, RadiusBundle(rho), **kw)
            rep.check_id = f"{name}-{dim}d"
            t1, t2 = rep.details["term_conditioning"], rep.details["term_perturbation"]
            ratio = max(t1, t2) / min(t1, t2) if min(t1, t2) > 0 else INF
            rows.append(rep)
            rows.append(BoundReport(f"{name}-{dim}d-balance", ratio, 4.0,
                                    details={"term_conditioning": t1, "term_perturbation": t2}))
            table.append({"case": name, "dim": dim, "lambda": lam, "rho": rho,
                          "lhs": rep.lhs, "rhs": rep.rhs, "term_conditioning": t1,
                          "term_perturbation": t2, "ratio": ratio})
    return rows, table


def disjunctive(shift=0.05, h=0.01, rho=1.5):
    sp = MetricSpace.euclidean(2)
    C1 = FiniteSet(sp, sample_segment([0.0, 0.0], [1.0, 0.0], h))
    C2 = FiniteSet(sp, [[-0.5, 0.5]])
    D1 = FiniteSet(sp, sample_segment([0.0, shift], [1.0, shift], h))
    D2 = FiniteSet(sp, [[-0.5, 0.5 + shift]])
    return [run_disjunctive_experiment([C1, C2], [D1, D2], [1.0, 1.0], [1.0, 1.0 + shift], rho)]


# ---------------------------------------------------------------------------
# sup-norm estimates: sample averages and regularizers
# ---------------------------------------------------------------------------

def expected_abs(x):
    """E|x - xi| for xi uniform on [0, 1]."""
    x = np.asarray(x, float)
    return np.where(x < 0, 0.5 - x, np.where(x > 1, x - 0.5, x * x - x + 0.5))


def sample_average(seed=0, size=20, h=0.025):
    rng = np.random.default_rng(seed)
    xi = rng.uniform(0.0, 1.0, size)
    box = [[-2.0, 2.0]]
    f = GriddedFunction.from_callable(expected_abs, box, h, name="E|x - xi|")

    def saa(x):
        x = np.asarray(x, float).reshape(-1)
        return np.abs(x[:, None] - xi[None, :]).mean(axis=1)

    g = GriddedFunction.from_callable(saa, box, h, name="sample average")
    return f, g


def saa_experiment(seed=0, rho=1.0):
    f, g = sample_average(seed)
    net = finite_set(np.linspace(-1.0, 1.0, 9))
    rep = check_supnorm_bound(f, g, rho, net, HolderModulus(1.0, 1.0))
    rep.check_id = "saa-supnorm"
    rep.details["seed"] = seed
    return [rep]


def mcp(t, lam=0.5, nu=4.0):
    """Concave-then-flat regularizer: lam|t| - nu t^2/2 up to |t| = lam/nu."""
    a = np.abs(np.asarray(t, float))
    return np.where(a <= lam / nu, lam * a - nu * a * a / 2, lam * lam / (2 * nu))


def regularizer_experiment(seed=0, rho=1.0):
    f, _ = sample_average(seed)
    box = [[-2.0, 2.0]]
    h = f.spacing[0]
    zero = GriddedFunction.from_callable(lambda x: np.zeros_like(x), box, h, name="0")
    r = GriddedFunction.from_callable(mcp, box, h, name="regularizer")
    rep = check_holder_sum(f, zero, f, r, HolderModulus(1.0, 1.0), rho)
    rep.check_id = "regularizer"
    return [rep]


# ---------------------------------------------------------------------------
# set-valued mappings
# ---------------------------------------------------------------------------

def kkt_sweep(deltas=(0.01, 0.02, 0.04, 0.08), rho=1.0, h=0.05):
    """f0 = x^2, f1 = x - 1 against g0 = x^2 + d x, g1 = x - 1 - d."""
    box = [[-2.0, 2.0]]
    ones = np.ones_like

    def problem(d):
        g0 = GriddedFunction.from_callable(lambda x: x * x + d * x, box, h, name="f0")
        g1 = GriddedFunction.from_callable(lambda x: x - 1 - d, box, h, name="f1")
        return ConstrainedProblem(g0, (g1,), (lambda x: 2 * x + d, ones))

    base = problem(0.0)
    rows, table = [], []
    ident = check_kkt_bound(base, base, rho)
    rows.append(BoundReport("kkt-identity", ident.lhs, 0.0, relation="eq", tol=0.0))
    for d in deltas:
        rep = check_kkt_bound(base, problem(d), rho)
        rep.check_id = f"kkt-delta={d:g}"
        rows.append(rep)
        table.append({"delta": d, "lhs": rep.lhs, "rhs": rep.rhs})
    slope = max(abs(b["lhs"] - a["lhs"]) / (b["delta"] - a["delta"])
                for a, b in zip(table, table[1:]))
    m = 1
    rows.append(BoundReport("kkt-slope", slope, (1 + m * rho) * 1.1, details={"rho": rho}))
    return rows, table


def ratio_sweeps(ts=(0.2, 0.1, 0.05, 0.025)):
    rows, table = [], []
    for label, sweep in (("subgradient", ratio_sweep_subgradients),
                         ("normal-cone", ratio_sweep_normal_cones)):
        res = sweep(ts)
        cap = 2 * res[0]["ratio"]
        worst = max(r["ratio"] for r in res)
        rows.append(BoundReport(f"ratio-{label}", worst, cap))
        table += [dict(kind=label, **r) for r in res]
    return rows, table


def setvalued_demos(h=0.05):
    sp = MetricSpace.euclidean(1)
    rows = []
    xs = lattice(-1.0, 2.0, h)
    S1 = GriddedMapping(sp, sp, xs, [[2 * x] for x in xs], "grad f")
    T1 = GriddedMapping(sp, sp, xs, [[2 * x + 0.1] for x in xs], "grad g")
    N = normal_cone_graph((0.0, 1.0), 10.0, h, (-1.0, 2.0))
    N2 = normal_cone_graph((0.05, 1.0), 10.0, h, (-1.0, 2.0))
    rep = check_sum_mappings(S1, T1, N, N, RadiusBundle(1.0))
    rep.check_id = "sum-mappings-gradient"
    rows.append(rep)
    rep = check_sum_mappings(S1, T1, N, N2, RadiusBundle(1.0))
    rep.check_id = "sum-mappings-cones"
    rows.append(rep)
    ident = GriddedMapping(sp, sp, xs, [[x] for x in xs], "x")
    shifted = GriddedMapping(sp, sp, xs, [[x + 0.2] for x in xs], "x+0.2")
    rep = check_geneq_bound(ident, shifted, NearSolutionQuery(0.0, 0.05, 1.0, 0.3))
    rep.check_id = "geneq-identity"
    rows.append(rep)
    rep = dc_mapping_bound(PLConvex.abs(scale=0.5), PLConvex.abs(), PLConvex.abs(scale=0.5),
                           PLConvex.abs(0.1), 1.0, step=h)
    rows.append(rep)
    rep = composite_stationarity_bound(PLConvex.abs(), PLConvex.abs(0.05), lambda X: X[:, 0] ** 2,
                                       lambda X: X[:, 0] ** 2 + 0.02 * X[:, 0], 1.0, 0.1,
                                       JF=lambda X: 2 * X, JG=lambda X: 2 * X + 0.02)
    rows.append(rep)
    return rows


CASES = {
    "counterexamples": lambda seed: (counterexamples(), None),
    "case-i": lambda seed: case_one_sweep(),
    "poor-conditioning": lambda seed: poor_conditioning(),
    "constrained": lambda seed: constrained_cases(),
    "disjunctive": lambda seed: (disjunctive(), None),
    "saa": lambda seed: (saa_experiment(seed), None),
    "regularizer": lambda seed: (regularizer_experiment(seed), None),
    "kkt-sweep": lambda seed: kkt_sweep(),
    "ratio-sweep": lambda seed: ratio_sweeps(),
    "setvalued": lambda seed: (setvalued_demos(), None),
}


def run_case(case_id, seed=0):
    """(rows, table) for a named experiment; table is None for non-sweeps."""
    try:
        fn = CASES[case_id]
    except KeyError:
        raise KeyError(f"unknown experiment {case_id!r}; known: {', '.join(sorted(CASES))}")
    return fn(seed)
