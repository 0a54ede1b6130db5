"""Approximation schemes for constrained problems, solved by grid enumeration.

Case I replaces a feasibility problem by a penalized problem on the product
space, Case II softens inequality constraints with slack variables and
Case III uses a plain penalty.  Each checker computes both sides of the
corresponding error bound on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .epigraph import (GriddedFunction, NodeFunction, kenmochi_dl,
                       validate_holder)
from .errors import InfeasibleApproximationError, InputError, PreconditionError
from .metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, ball_intersect,
                          dist_to_centroid, nearest, trunc_hausdorff)
from .report import BoundReport
from .set_calculus import TAU, auto_radius, intersect_sets


# ---------------------------------------------------------------------------
# conditioning functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditioningFn:
    """A nondecreasing psi: [0, inf) -> [0, inf) with an inverse.

    form is 'power' (scale * g**beta), 'linear' (g / delta) or 'table'
    (piecewise-linear interpolation through increasing knots).
    """
    form: str
    beta: float = 1.0
    scale: float = 1.0
    knots: tuple = ()
    values: tuple = ()

    @classmethod
    def power(cls, beta, scale=1.0):
        if beta <= 0 or scale <= 0:
            raise InputError("power conditioning needs beta > 0 and scale > 0")
        return cls("power", float(beta), float(scale))

    @classmethod
    def linear(cls, delta):
        if delta <= 0:
            raise InputError("linear conditioning needs delta > 0")
        return cls("power", 1.0, 1.0 / float(delta))

    @classmethod
    def table(cls, knots, values):
        k = tuple(float(v) for v in knots)
        v = tuple(float(x) for x in values)
        if len(k) < 2 or len(k) != len(v) or k[0] != 0.0:
            raise InputError("table needs matching knots starting at 0")
        if np.any(np.diff(k) <= 0) or np.any(np.diff(v) < 0):
            raise InputError("table knots must increase and values must not decrease")
        return cls("table", knots=k, values=v)

    def __call__(self, g):
        g = max(0.0, float(g))
        if g == INF:
            return INF
        if self.form == "power":
            return self.scale * g ** self.beta
        k, v = self.knots, self.values
        if g > k[-1]:
            slope = (v[-1] - v[-2]) / (k[-1] - k[-2])
            return v[-1] + slope * (g - k[-1])
        return float(np.interp(g, k, v))

    def inverse(self, t):
        """Least g with psi(g) >= t (the usual inverse for increasing psi)."""
        t = max(0.0, float(t))
        if t == INF:
            return INF
        if self.form == "power":
            return (t / self.scale) ** (1.0 / self.beta)
        k, v = np.asarray(self.knots), np.asarray(self.values)
        if t > v[-1]:
            slope = (v[-1] - v[-2]) / (k[-1] - k[-2])
            if slope <= 0:
                return INF
            return k[-1] + (t - v[-1]) / slope
        i = int(np.searchsorted(v, t, side="left"))
        if i == 0:
            return 0.0
        a0, a1, b0, b1 = k[i - 1], k[i], v[i - 1], v[i]
        return float(a0 + (t - b0) * (a1 - a0) / (b1 - b0)) if b1 > b0 else float(a1)

    def validate(self, upto=10.0, n=1001, tol=1e-9):
        """Monotonicity and inverse round trip on a probe grid."""
        g = np.linspace(0.0, upto, n)
        vals = np.array([self(x) for x in g])
        if np.any(np.diff(vals) < -tol):
            return False
        for t in vals:
            if abs(self(self.inverse(t)) - t) > tol * max(1.0, abs(t)):
                return False
        return True


# ---------------------------------------------------------------------------
# Case I: feasibility problems
# ---------------------------------------------------------------------------

def solve_feasibility_approx(Cs, Ds, lam, psi, rho, rho_bar=None, slack=0.0, tol=TAU):
    """Minimize lam * sum d(x_i, x_1) over D_1 x ... x D_m within B(rho).

    For a fixed x_1 the other coordinates decouple, so the minimizer is found
    by scanning x_1 over D_1 cap B(rho).  Ties go to the first point.
    Returns (x1_bar, report).
    """
    Cs, Ds = list(Cs), list(Ds)
    m = len(Cs)
    if m == 0 or m != len(Ds):
        raise InputError("nonempty lists of equal length required")
    if lam <= 0:
        raise InputError("lambda must be positive")
    space = Cs[0].space
    Db = [ball_intersect(D, rho) for D in Ds]
    if any(D.empty for D in Db):
        raise InfeasibleApproximationError("D_i cap B(rho) is empty for some i")
    X1 = Db[0].points
    obj = np.zeros(len(X1))
    for D in Db[1:]:
        obj += nearest(space, X1, D.points)
    obj *= lam
    k = int(np.argmin(obj))
    x1 = X1[k]

    if rho_bar is None:
        rho_bar = auto_radius(3 * rho)
    inter = intersect_sets(Cs, tol)
    if inter.empty:
        lhs = worst = INF
    else:
        lhs = float(nearest(space, x1[None, :], inter.points)[0])
        ties = X1[obj <= obj[k] + 1e-12]
        worst = float(nearest(space, ties, inter.points).max())
    dls = [trunc_hausdorff(C, D, rho_bar) for C, D in zip(Cs, Ds)]
    rhs = rho_bar / lam + psi(rho_bar / lam) + (1 + 2 * m * lam) * max(dls)

    need_rho = 2 * lam * (m - 1) * max(dist_to_centroid(D) for D in Ds)
    cq_gap = _feasibility_cq_gap(Cs, inter, psi, rho_bar)
    rep = BoundReport("feasibility", lhs, rhs, tol=tol + slack, details={
        "x1": x1.tolist(), "objective": float(obj[k]), "rho_bar": rho_bar,
        "worst_minimizer_dist": worst,
        "dl_components": dls, "cq_gap": cq_gap})
    rep.add_condition("rho > 2 lam (m-1) max dist(ctr, D_i)", rho > need_rho, need_rho)
    rep.add_condition("intersection of C_i meets B(rho)",
                      not ball_intersect(inter, rho).empty)
    rep.add_condition("rho_bar > 3 rho", rho_bar > 3 * rho, 3 * rho)
    rep.add_condition("constraint qualification on C_i cap B(rho_bar)", cq_gap <= tol, cq_gap)
    return x1, rep


def _feasibility_cq_gap(Cs, inter, psi, rho_bar):
    """max over x_1 in C_1 cap B(rho_bar) of dist(x_1, cap C) - psi(sum_i dist(x_1, C_i cap B)).

    Since psi is nondecreasing, the worst choice of the other x_i is the
    nearest point of each C_i cap B(rho_bar), so this is exact on finite sets.
    """
    space = Cs[0].space
    Cb = [ball_intersect(C, rho_bar) for C in Cs]
    X1 = Cb[0].points
    if len(X1) == 0:
        return -INF
    s = np.zeros(len(X1))
    for C in Cb[1:]:
        s += nearest(space, X1, C.points)
    d = nearest(space, X1, inter.points)
    return float(max(di - psi(si) for di, si in zip(d, s)))


# ---------------------------------------------------------------------------
# Cases II and III: inequality-constrained problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """minimize f0 subject to f_i <= 0, all on one grid."""
    objective: GriddedFunction
    constraints: tuple = ()
    gradients: tuple = field(default=())  # optional callables, see setvalued.kkt_mapping

    def __post_init__(self):
        cons = tuple(self.constraints)
        for c in cons:
            if not self.objective.same_grid(c):
                raise InputError("objective and constraints must share a grid")
        object.__setattr__(self, "constraints", cons)

    @property
    def space(self):
        return self.objective.space

    @property
    def m(self):
        return len(self.constraints)

    def max_constraint(self):
        if not self.constraints:
            return np.full(len(self.objective), -INF)
        return np.max(np.stack([c.values for c in self.constraints]), axis=0)

    def feasible(self):
        return self.max_constraint() <= 0


def _sup_gap(p, q, rho_bar):
    """max over i = 0..m of sup over nodes in B(rho_bar) of |f_i - g_i|."""
    ball = p.space.in_ball(p.objective.nodes, rho_bar)
    if not ball.any():
        return 0.0
    gaps = [np.abs(a.values[ball] - b.values[ball]).max()
            for a, b in zip((p.objective,) + p.constraints, (q.objective,) + q.constraints)]
    return float(max(gaps))


def _check_pair(p, q):
    if p.m != q.m:
        raise InputError("problems must have the same number of constraints")
    if not p.objective.same_grid(q.objective):
        raise InputError("problems must share a grid")
    for fn in (p.objective, q.objective) + p.constraints + q.constraints:
        if not np.isfinite(fn.values).all():
            raise InputError("objective and constraint values must be finite")


def validate_conditioning(p, psi, tol=1e-9):
    """Check max_i f_i(x) >= psi(dist(x, feasible set)) at every infeasible node.

    Returns None when it holds, else the offending node.
    """
    feas = p.feasible()
    if not feas.any():
        return None
    space = p.space
    X = p.objective.nodes
    bad = np.flatnonzero(~feas)
    d = nearest(space, X[bad], X[feas])
    mc = p.max_constraint()[bad]
    for j, di, ci in zip(bad, d, mc):
        if ci < psi(di) - tol:
            return X[j].tolist()
    return None


def _lipschitz_modulus(p, q, rho_hat, modulus):
    """Validate a declared modulus, or compute the smallest one on the nodes."""
    X = p.objective.nodes
    ball = p.space.in_ball(X, rho_hat)
    if modulus is not None:
        for fn in (p.objective, q.objective):
            worst = validate_holder(p.space, X[ball], fn.values[ball], modulus)
            if worst > 1e-8:
                raise PreconditionError(f"objective {fn.name!r} violates the modulus by {worst:.3g}")
        return modulus(rho_hat)
    best = 0.0
    P = X[ball]
    for fn in (p.objective, q.objective):
        v = fn.values[ball]
        for s in range(0, len(P), 512):
            D = p.space.pair_dist(P[s:s + 512], P)
            G = np.abs(v[s:s + 512, None] - v[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(D > 0, G / D, 0.0)
            best = max(best, float(r.max()))
    return best


def build_softened(p, q, lam, y_step=None, y_max=None):
    """f(x, y) and g^lam(x, y) on the product grid X x [0, y_max]^m (sup-norm on y)."""
    _check_pair(p, q)
    if lam <= 0:
        raise InputError("lambda must be positive")
    f0 = p.objective
    m = p.m
    if m == 0:
        raise InputError("softening needs at least one constraint")
    positive = [s for s in f0.spacing if s > 0]
    y_step = y_step or (min(positive) if positive else 0.1)
    y_max = 2.0 if y_max is None else y_max
    ny = int(math.ceil(y_max / y_step - 1e-9)) + 1
    y_max = (ny - 1) * y_step
    space = MetricSpace.product(f0.space, MetricSpace.sup(m))
    xs = f0.nodes
    axis = np.round(np.linspace(0.0, y_max, ny), 12)
    Y = np.stack(np.meshgrid(*[axis] * m, indexing="ij"), axis=-1).reshape(-1, m)
    # product grid in C order: x index major, y minor
    fvals = np.where(p.feasible(), f0.values, INF)
    yzero = np.all(Y == 0, axis=1)
    F = np.where(yzero[None, :], fvals[:, None], INF).ravel()
    G = q.objective.values[:, None] + lam * Y.sum(axis=1)[None, :]
    ok = np.ones((len(xs), len(Y)), bool)
    for i, c in enumerate(q.constraints):
        ok &= c.values[:, None] <= Y[None, :, i] + 1e-12
    G = np.where(ok, G, INF).ravel()
    nodes = np.concatenate([np.repeat(xs, len(Y), axis=0), np.tile(Y, (len(xs), 1))], axis=1)
    shape = tuple(f0.shape) + (ny,) * m
    lo = tuple(f0.lo) + (0.0,) * m
    hi = tuple(f0.hi) + (y_max,) * m
    f = GriddedFunction(space, nodes, F, "f (actual)", None, None, lo, hi, shape)
    g = GriddedFunction(space, nodes, G, "g^lam (softened)", None, None, lo, hi, shape)
    return f, g


def _dist_to_epi_origin(fn):
    """dist((ctr, 0), epi fn) = min over finite nodes of max(|x|, fn(x)^+)."""
    fin = fn.finite
    if not fin.any():
        return INF
    return float(np.min(np.maximum(fn.space.norms(fn.nodes[fin]), np.maximum(fn.values[fin], 0.0))))


def check_softening_bound(p, q, lam, psi, radii: RadiusBundle, modulus=None,
                          y_step=None, y_max=None, tol=TAU):
    """Constraint softening: dl_rho(epi f, epi g^lam) against the two-term bound."""
    _check_pair(p, q)
    rho = radii.rho
    X = p.objective.nodes
    m = p.m
    bad = validate_conditioning(p, psi)
    if bad is not None:
        raise PreconditionError(f"conditioning function fails at node {bad}")

    # epi f does not depend on the y-grid; dist to epi g^lam is bounded by the x-only formula
    fvals = np.where(p.feasible(), p.objective.values, INF)
    d_f = _dist_to_epi_origin(NodeFunction(p.space, X, fvals))
    # for g^lam the cheapest y is y_i = max(g_i(x), 0)
    ymin = np.maximum(np.stack([c.values for c in q.constraints]), 0.0) if m else np.zeros((0, len(X)))
    gv = q.objective.values + lam * ymin.sum(axis=0)
    d_g = float(np.min(np.maximum(np.maximum(p.space.norms(X), ymin.max(axis=0) if m else 0.0),
                                  np.maximum(gv, 0.0))))
    need_bar = 2 * rho + max(d_f, d_g)
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    ball_bar = p.space.in_ball(X, rho_bar)
    inf_f0 = float(p.objective.values[ball_bar].min()) if ball_bar.any() else INF
    need_star = rho_bar + max(0.0, -inf_f0) if ball_bar.any() else rho_bar
    rho_star = radii.rho_star if radii.rho_star is not None else need_star
    t = max(rho_star / lam, psi.inverse(rho_star / lam))
    need_hat = rho_bar + t
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    kappa = _lipschitz_modulus(p, q, rho_hat, modulus)
    delta = _sup_gap(p, q, rho_bar)

    if y_max is None:
        y_max = max(rho_star / lam, 2 * rho + 1)
    f, g = build_softened(p, q, lam, y_step, y_max)
    y_step_used = f.spacing[-1]
    lhs = kenmochi_dl(f, g, rho)
    term1 = (1 + kappa) * t
    term2 = (1 + m * lam) * delta
    slack = (1 + m * lam) * y_step_used
    rep = BoundReport("softening", lhs, term1 + term2, tol=tol + slack, details={
        "lambda": lam, "kappa": kappa, "delta": delta, "term_conditioning": term1,
        "term_perturbation": term2, "rho_bar": rho_bar, "rho_star": rho_star,
        "rho_hat": rho_hat, "y_step": y_step_used, "y_max": f.hi[-1]})
    rep.add_condition("actual feasible set nonempty", d_f < INF)
    rep.add_condition("rho_bar > 2rho + dist to epigraphs", rho_bar > need_bar, need_bar)
    rep.add_condition("rho* >= rho_bar + max(0, -inf f0)", rho_star >= need_star, need_star)
    rep.add_condition("rho_hat > rho_bar + max(rho*/lam, psi^-1(rho*/lam))", rho_hat > need_hat, need_hat)
    return rep


def build_penalty(p, q, lam):
    """f (constrained actual) and g^lam = g0 + lam * sum max(0, g_i) on the x-grid."""
    _check_pair(p, q)
    f = p.objective.with_values(np.where(p.feasible(), p.objective.values, INF), "f (actual)")
    pen = sum((np.maximum(c.values, 0.0) for c in q.constraints), np.zeros(len(q.objective)))
    g = q.objective.with_values(q.objective.values + lam * pen, "g^lam (penalty)")
    return f, g


def check_penalty_bound(p, q, lam, psi, radii: RadiusBundle, modulus=None, tol=TAU):
    """Penalty formulation: dl_rho(epi f, epi g^lam) against the two-term bound."""
    _check_pair(p, q)
    rho = radii.rho
    m = p.m
    bad = validate_conditioning(p, psi)
    if bad is not None:
        raise PreconditionError(f"conditioning function fails at node {bad}")
    f, g = build_penalty(p, q, lam)
    X = p.objective.nodes
    d_f, d_g = _dist_to_epi_origin(f), _dist_to_epi_origin(g)
    need_bar = 2 * rho + max(d_f, d_g)
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    ball_bar = p.space.in_ball(X, rho_bar)
    inf_f0 = float(p.objective.values[ball_bar].min()) if ball_bar.any() else INF
    t = psi.inverse(max(0.0, (rho_bar - inf_f0) / lam))
    need_hat = rho_bar + t
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    kappa = _lipschitz_modulus(p, q, rho_hat, modulus)
    delta = _sup_gap(p, q, rho_bar)
    lhs = kenmochi_dl(f, g, rho)
    term1 = max(1.0, kappa) * t
    term2 = (1 + m * lam) * delta
    rep = BoundReport("penalty", lhs, term1 + term2, tol=tol, details={
        "lambda": lam, "kappa": kappa, "delta": delta, "term_conditioning": term1,
        "term_perturbation": term2, "rho_bar": rho_bar, "rho_hat": rho_hat,
        "inf_f0": inf_f0})
    rep.add_condition("actual feasible set nonempty", d_f < INF)
    rep.add_condition("rho_bar > 2rho + dist to epigraphs", rho_bar > need_bar, need_bar)
    rep.add_condition("rho_hat > rho_bar + psi^-1(...)", rho_hat > need_hat, need_hat)
    return rep


def grid_argmin(fn, rho=None):
    """Minimizing nodes (first index on ties), optionally within B(rho)."""
    v = fn.values
    if rho is not None:
        v = np.where(fn.space.in_ball(fn.nodes, rho), v, INF)
    if np.all(v == INF):
        return None
    return fn.nodes[int(np.argmin(v))]


# ---------------------------------------------------------------------------
# disjunctive programming
# ---------------------------------------------------------------------------

def run_disjunctive_experiment(Cs, Ds, c, d, rho, tol=TAU):
    """Linear objectives over unions of sets: epigraph distance versus the data."""
    from .epigraph import check_solution_estimates
    from .set_calculus import union_set
    Cs, Ds = list(Cs), list(Ds)
    if len(Cs) != len(Ds) or not Cs:
        raise InputError("nonempty families of equal size required")
    if any(S.empty for S in Cs + Ds):
        raise InputError("all sets must be nonempty")
    n = Cs[0].space.dim
    space = MetricSpace.euclidean(n)
    c = np.atleast_1d(np.asarray(c, float))
    d = np.atleast_1d(np.asarray(d, float))
    C = union_set([FiniteSet(space, S.points) for S in Cs]).unique()
    D = union_set([FiniteSet(space, S.points) for S in Ds]).unique()
    f = NodeFunction(space, C.points, C.points @ c, "<c,x> on C")
    g = NodeFunction(space, D.points, D.points @ d, "<d,x> on D")
    cn, dn = float(np.linalg.norm(c)), float(np.linalg.norm(d))
    rho_bar = rho * (1 + max(cn, dn))
    lhs = kenmochi_dl(f, g, rho)
    comp = max(trunc_hausdorff(FiniteSet(space, a.points), FiniteSet(space, b.points), rho_bar)
               for a, b in zip(Cs, Ds))
    rhs = rho * float(np.linalg.norm(c - d)) + (1 + max(cn, dn)) * comp
    sol = check_solution_estimates(f, g, 0.0, 2 * lhs + 1e-6, rho, tol)
    return BoundReport("disjunctive", lhs, rhs, tol=tol, details={
        "rho_bar": rho_bar, "component_dl": comp,
        "min_c": float((C.points @ c).min()), "min_d": float((D.points @ d).min()),
        "solution_estimates": sol.summary()})
