"""Set-valued mappings on grids and the error bounds for generalized equations.

A mapping is stored node-wise: for every domain node a finite cloud of
values (possibly empty).  Interval-valued pieces are sampled with a step
and rays are cut off at an extent L.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _polygon
from .errors import InputError, PreconditionError, UnsupportedError
from .metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, as_points,
                          lattice, sample_ray, sample_segment, trunc_excess,
                          trunc_hausdorff)
from .report import BoundReport
from .set_calculus import TAU, auto_radius


# ---------------------------------------------------------------------------
# mappings
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GriddedMapping:
    domain: MetricSpace
    codomain: MetricSpace
    nodes: np.ndarray
    values: tuple
    name: str = ""
    step: float = 0.0
    extent: float = INF

    def __post_init__(self):
        X = as_points(self.nodes, self.domain.dim)
        vals = tuple(as_points(v, self.codomain.dim) if len(np.asarray(v)) else
                     np.zeros((0, self.codomain.dim)) for v in self.values)
        if len(vals) != len(X):
            raise InputError("one value cloud per node required")
        object.__setattr__(self, "nodes", X)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, func, nodes, domain=None, codomain=None, name="", step=0.0,
                      extent=INF):
        """``func(x)`` returns the value cloud at node x (rows are points)."""
        domain = domain or MetricSpace.euclidean(np.atleast_2d(as_points(nodes)).shape[1])
        X = as_points(nodes, domain.dim)
        vals = [np.asarray(func(x if domain.dim > 1 else float(x[0])), float) for x in X]
        if codomain is None:
            first = next((v for v in vals if v.size), np.zeros(1))
            codomain = MetricSpace.euclidean(1 if first.ndim <= 1 else first.shape[-1])
        vals = [v.reshape(-1, codomain.dim) for v in vals]
        return cls(domain, codomain, X, tuple(vals), name, step, extent)

    def __len__(self):
        return len(self.nodes)

    @property
    def graph_space(self):
        return MetricSpace.product(self.domain, self.codomain)

    @property
    def nonempty_valued(self):
        return all(len(v) for v in self.values)

    def graph(self) -> FiniteSet:
        rows = [np.hstack([np.repeat(x[None, :], len(v), axis=0), v])
                for x, v in zip(self.nodes, self.values) if len(v)]
        P = np.vstack(rows) if rows else np.zeros((0, self.domain.dim + self.codomain.dim))
        return FiniteSet(self.graph_space, P, f"gph {self.name}")

    def at(self, j) -> FiniteSet:
        return FiniteSet(self.codomain, self.values[j], f"{self.name}(x_{j})")

    def inverse_ball(self, y, radius, tol=TAU) -> FiniteSet:
        """Nodes x with some value within radius (+tol) of y."""
        y = np.asarray(y, float).reshape(1, -1)
        keep = [len(v) > 0 and float(self.codomain.pair_dist(v, y).min()) <= radius + tol
                for v in self.values]
        return FiniteSet(self.domain, self.nodes[np.asarray(keep, bool)], f"{self.name}^-1")

    def same_nodes(self, other):
        return (self.domain == other.domain and self.codomain == other.codomain
                and self.nodes.shape == other.nodes.shape
                and np.allclose(self.nodes, other.nodes))


def graph_dl(S, T, rho):
    if S.graph_space != T.graph_space:
        raise InputError("mappings live in different spaces")
    return trunc_hausdorff(S.graph(), T.graph(), rho)


# ---------------------------------------------------------------------------
# generalized equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NearSolutionQuery:
    y_star: tuple
    eps: float
    rho: float
    delta: float = None

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y_star, float))
        object.__setattr__(self, "y_star", tuple(y.tolist()))
        if self.eps < 0:
            raise InputError("eps must be nonnegative")
        if self.eps > self.rho:
            raise InputError("eps must not exceed rho")


def near_solution_set(S, q, tol=TAU):
    """S^-1(B(y*, eps)): nodes whose value cloud comes within eps of y*."""
    if q.eps < 0:
        raise InputError("eps must be nonnegative")
    return S.inverse_ball(q.y_star, q.eps, tol)


def check_geneq_bound(S, T, q, tol=TAU):
    """exs of near-solutions of S over those of T against dl_rho(gph S, gph T)."""
    rho, eps = q.rho, q.eps
    GS, GT = S.graph(), T.graph()
    dl = trunc_hausdorff(GS, GT, rho)
    delta = q.delta if q.delta is not None else eps + dl
    A = near_solution_set(S, q, tol)
    A = FiniteSet(A.space, A.points[S.domain.in_ball(A.points, rho)]) if len(A) else A
    B = T.inverse_ball(q.y_star, delta, tol)
    lhs = trunc_excess(A, B, INF)
    ystar_norm = float(S.codomain.norms(np.asarray(q.y_star)[None, :])[0])
    slack = max(S.step, T.step)
    rep = BoundReport("geneq", lhs, dl, tol=tol + slack, details={
        "delta": delta, "near_solutions": len(A), "target_solutions": len(B)})
    rep.add_condition("graphs nonempty", not GS.empty and not GT.empty)
    rep.add_condition("y* in B(rho - eps)", ystar_norm <= rho - eps + 1e-12, ystar_norm)
    rep.add_condition("delta >= eps + dl (closed graphs on a grid)",
                      delta >= eps + dl - tol, eps + dl)
    return rep


# ---------------------------------------------------------------------------
# sums of mappings
# ---------------------------------------------------------------------------

def _value_sum(a, b):
    if len(a) == 0 or len(b) == 0:
        return np.zeros((0, a.shape[1]))
    return np.unique((a[:, None, :] + b[None, :, :]).reshape(-1, a.shape[1]), axis=0)


def mapping_sum(S1, S2, name=None):
    if not S1.same_nodes(S2):
        raise InputError("summands must share domain nodes and spaces")
    vals = tuple(_value_sum(a, b) for a, b in zip(S1.values, S2.values))
    return GriddedMapping(S1.domain, S1.codomain, S1.nodes, vals,
                          name or f"{S1.name}+{S2.name}", max(S1.step, S2.step),
                          min(S1.extent, S2.extent))


def _pointwise_dl(S, T, mask, rho):
    out = 0.0
    for j in np.flatnonzero(mask):
        out = max(out, trunc_hausdorff(S.at(j), T.at(j), rho))
    return out


def mapping_modulus(S, mask, rho_star=INF):
    """Smallest kappa with dl_rho*(S(x), S(x')) <= kappa d(x, x') over masked node pairs."""
    idx = np.flatnonzero(mask)
    best = 0.0
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            d = S.domain.dist(S.nodes[i], S.nodes[j])
            if d > 0:
                best = max(best, trunc_hausdorff(S.at(i), S.at(j), rho_star) / d)
    return best


def check_sum_mappings(S1, T1, S2, T2, radii: RadiusBundle, kappa=None, tol=TAU):
    """gph(S1+S2) versus gph(T1+T2) when S1, T1 share a Lipschitz modulus.

    kappa may be a number, a callable of rho_hat or None (then the smallest
    modulus on the nodes is used, taken with rho* = inf which dominates any
    finite truncation).
    """
    for M in (T1, S2, T2):
        if not S1.same_nodes(M):
            raise InputError("all four mappings must share domain nodes and spaces")
    if not (S1.nonempty_valued and T1.nonempty_valued):
        raise PreconditionError("S1 and T1 must have nonempty values at every node")
    rho = radii.rho
    dom = S1.domain
    in_rho = dom.in_ball(S1.nodes, rho)
    rho_p = max(float(S1.codomain.norms(v).max()) for M in (S1, T1)
                for v, k in zip(M.values, in_rho) if k) if in_rho.any() else 0.0
    need_bar = rho + rho_p
    rho_bar = radii.rho_bar if radii.rho_bar is not None else need_bar
    eta2 = graph_dl(S2, T2, rho_bar)
    need_hat = rho + eta2
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    in_hat = dom.in_ball(S1.nodes, rho_hat)
    if kappa is None:
        k = max(mapping_modulus(S1, in_hat), mapping_modulus(T1, in_hat))
        source = "computed"
    else:
        k = float(kappa(rho_hat)) if callable(kappa) else float(kappa)
        source = "declared"
    need_star = 3 * rho_p + k * (rho_hat - rho)
    rho_star = radii.rho_star if radii.rho_star is not None else auto_radius(need_star)
    if source == "declared":
        worst = max(mapping_modulus(S1, in_hat, rho_star), mapping_modulus(T1, in_hat, rho_star))
        if worst > k + 1e-9:
            raise PreconditionError(f"declared modulus {k} is below the observed {worst:.6g}")
    need_extent = 2 * rho_bar
    for M in (S2, T2):
        if M.extent < need_extent:
            raise UnsupportedError(
                f"mapping {M.name!r} is sampled to extent {M.extent}, the check needs {need_extent:.6g}")
    for M in (S1, T1):
        if M.extent < 2 * rho_star:
            raise UnsupportedError(
                f"mapping {M.name!r} is sampled to extent {M.extent}, the check needs {2 * rho_star:.6g}")

    lhs = graph_dl(mapping_sum(S1, S2), mapping_sum(T1, T2), rho)
    first = _pointwise_dl(S1, T1, in_rho, rho_star)
    rhs = first + (1 + k) * eta2
    slack = max(M.step for M in (S1, T1, S2, T2))
    rep = BoundReport("sum-mappings", lhs, rhs, tol=tol + slack, details={
        "rho_prime": rho_p, "rho_bar": rho_bar, "rho_hat": rho_hat, "rho_star": rho_star,
        "kappa": k, "kappa_source": source, "pointwise_dl": first, "graph_dl_2": eta2})
    rep.add_condition("rho_bar >= rho + rho'", rho_bar >= need_bar - 1e-12, need_bar)
    rep.add_condition("rho_hat > rho + dl(gph S2, gph T2)", rho_hat > need_hat, need_hat)
    rep.add_condition("rho* > 3rho' + kappa (rho_hat - rho)", rho_star > need_star, need_star)
    return rep


# ---------------------------------------------------------------------------
# 1-D convex piecewise-linear functions, subgradients, normal cones
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PLConvex:
    """Convex piecewise-linear f on R (or on a closed interval ``domain``).

    slopes has one more entry than breakpoints; f(breakpoints[0]) = offset,
    or f(0) = offset when there are no breakpoints.
    """
    breakpoints: tuple = ()
    slopes: tuple = (0.0,)
    offset: float = 0.0
    domain: tuple = None

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        if len(sl) != len(bp) + 1:
            raise InputError("need exactly one more slope than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise InputError("breakpoints must increase")
        if any(s2 < s1 for s1, s2 in zip(sl, sl[1:])):
            raise InputError("slopes must be nondecreasing for a convex function")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if self.domain is not None:
            a, b = (float(v) for v in self.domain)
            if b < a:
                raise InputError("empty domain")
            object.__setattr__(self, "domain", (a, b))

    @classmethod
    def abs(cls, center=0.0, scale=1.0, offset=0.0):
        return cls((center,), (-scale, scale), offset)

    def __call__(self, x):
        x = np.asarray(x, float)
        bp, sl = self.breakpoints, self.slopes
        anchor = bp[0] if bp else 0.0
        v = self.offset + sl[0] * (x - anchor)
        for b, s0, s1 in zip(bp, sl, sl[1:]):
            v = v + (s1 - s0) * np.maximum(0.0, x - b)
        if self.domain is not None:
            a, b = self.domain
            v = np.where((x >= a - 1e-12) & (x <= b + 1e-12), v, INF)
        return v

    def subdifferential(self, x, tol=1e-12):
        """(lo, hi) with lo <= hi, or None outside the domain."""
        x = float(x)
        if self.domain is not None:
            a, b = self.domain
            if x < a - tol or x > b + tol:
                return None
        bp, sl = self.breakpoints, self.slopes
        k = int(np.searchsorted(bp, x - tol, side="left"))
        if k < len(bp) and abs(bp[k] - x) <= tol:
            lo, hi = sl[k], sl[k + 1]
        else:
            lo = hi = sl[k]
        if self.domain is not None:
            if abs(x - self.domain[0]) <= tol:
                lo = -INF
            if abs(x - self.domain[1]) <= tol:
                hi = INF
        return lo, hi

    def kinks(self):
        pts = list(self.breakpoints)
        if self.domain is not None:
            pts += list(self.domain)
        return pts


def _axis_nodes(box, step, extra=()):
    a, b = box
    xs = list(lattice(a, b, step)) + [float(e) for e in extra if a - 1e-12 <= e <= b + 1e-12]
    return np.unique(np.round(np.array(xs, float), 12))


def subgradient_graph(f: PLConvex, extent, step, box=None, extra_nodes=(), name=None):
    """gph of the subdifferential: a monotone staircase, rays cut at +-extent."""
    box = box or (-extent, extent)
    xs = _axis_nodes(box, step, list(f.kinks()) + list(extra_nodes))
    vals = []
    for x in xs:
        sd = f.subdifferential(x)
        if sd is None:
            vals.append(np.zeros((0, 1)))
            continue
        lo, hi = max(sd[0], -extent), min(sd[1], extent)
        vals.append(lattice(lo, hi, step).reshape(-1, 1) if lo <= hi else np.zeros((0, 1)))
    sp = MetricSpace.euclidean(1)
    return GriddedMapping(sp, sp, xs.reshape(-1, 1), tuple(vals), name or "subgradient",
                          step, extent)


def normal_cone_graph(C, extent, step, box=None, name=None):
    """gph N_C for an interval (a, b) or a convex polygon given by its vertices.

    Interval: nodes on ``box`` (default [a - 1, b + 1]); values are empty off C.
    Polygon: nodes are the grid points inside plus boundary samples.
    """
    arr = np.asarray(C, float)
    if arr.ndim == 1 and arr.size == 2:
        a, b = float(arr[0]), float(arr[1])
        if b < a:
            raise InputError("interval must satisfy a <= b")
        box = box or (a - 1.0, b + 1.0)
        xs = _axis_nodes(box, step, (a, b))
        vals = []
        for x in xs:
            if x < a - 1e-12 or x > b + 1e-12:
                vals.append(np.zeros((0, 1)))
            elif a == b:
                vals.append(lattice(-extent, extent, step).reshape(-1, 1))
            elif abs(x - a) <= 1e-12:
                vals.append(lattice(-extent, 0.0, step).reshape(-1, 1))
            elif abs(x - b) <= 1e-12:
                vals.append(lattice(0.0, extent, step).reshape(-1, 1))
            else:
                vals.append(np.zeros((1, 1)))
        sp = MetricSpace.euclidean(1)
        return GriddedMapping(sp, sp, xs.reshape(-1, 1), tuple(vals), name or "normal cone",
                              step, extent)
    return _polygon_normal_cone(arr, extent, step, name)


def _polygon_normal_cone(V, extent, step, name):
    if V.ndim != 2 or V.shape[1] != 2:
        raise InputError("polygon vertices must be an (k, 2) array")
    H = _polygon.hull_2d(V)
    if len(H) < 3:
        raise InputError("degenerate polygon")
    k = len(H)
    normals = []
    for i in range(k):
        e = H[(i + 1) % k] - H[i]
        n = np.array([e[1], -e[0]])
        normals.append(n / np.linalg.norm(n))
    lo, hi = H.min(axis=0), H.max(axis=0)
    gx, gy = lattice(lo[0], hi[0], step), lattice(lo[1], hi[1], step)
    G = np.array([[x, y] for x in gx for y in gy])
    on_edge = np.zeros(len(G), bool)
    for i in range(k):
        on_edge |= _polygon.dist_points_segment(G, H[i], H[(i + 1) % k], "l2") <= 1e-9
    interior = G[_polygon.inside(G, H) & ~on_edge]
    nodes, vals = [], []
    zero = np.zeros((1, 2))
    for x in interior:
        nodes.append(x)
        vals.append(zero)
    for i in range(k):
        seg = sample_segment(H[i], H[(i + 1) % k], step)[1:-1]
        ray = sample_ray(np.zeros(2), normals[i], extent, step)
        for x in seg:
            nodes.append(x)
            vals.append(ray)
    for i in range(k):
        n_in, n_out = normals[i - 1], normals[i]
        a0 = math.atan2(n_in[1], n_in[0])
        a1 = math.atan2(n_out[1], n_out[0])
        while a1 < a0:
            a1 += 2 * math.pi
        arc = max(2, int(math.ceil((a1 - a0) * extent / step)) + 1)
        fan = [sample_ray(np.zeros(2), [math.cos(t), math.sin(t)], extent, step)
               for t in np.linspace(a0, a1, arc)]
        nodes.append(H[i])
        vals.append(np.unique(np.round(np.vstack(fan), 12), axis=0))
    sp = MetricSpace.euclidean(2)
    return GriddedMapping(sp, sp, np.array(nodes), tuple(vals), name or "normal cone",
                          step, extent)


def ratio_sweep_subgradients(ts, rho=2.0, step=0.01, extent=4.0):
    """dl of the subgradient graphs of |x| and |x - t| against sqrt of the epigraph dl."""
    from .epigraph import GriddedFunction, kenmochi_dl
    rows = []
    f = PLConvex.abs()
    box = [[-extent, extent]]
    F = GriddedFunction.from_callable(f, box, step / 2)
    for t in ts:
        g = PLConvex.abs(center=t)
        Sg = subgradient_graph(f, extent, step, extra_nodes=(t,))
        Tg = subgradient_graph(g, extent, step, extra_nodes=(0.0,))
        dl_gph = graph_dl(Sg, Tg, rho)
        dl_epi = kenmochi_dl(F, GriddedFunction.from_callable(g, box, step / 2), rho)
        rows.append({"t": t, "dl_gph": dl_gph, "dl_epi": dl_epi,
                     "ratio": dl_gph / math.sqrt(dl_epi) if dl_epi > 0 else INF})
    return rows


def ratio_sweep_normal_cones(ts, rho=2.0, step=0.01, extent=4.0):
    """dl of the normal-cone graphs of [0, 1] and [t, 1] against sqrt(dl of the sets)."""
    rows = []
    sp = MetricSpace.euclidean(1)
    C = FiniteSet(sp, lattice(0.0, 1.0, step / 2).reshape(-1, 1))
    for t in ts:
        N1 = normal_cone_graph((0.0, 1.0), extent, step, (-1.0, 2.0))
        N2 = normal_cone_graph((t, 1.0), extent, step, (-1.0, 2.0))
        D = FiniteSet(sp, lattice(t, 1.0, step / 2).reshape(-1, 1))
        dl_gph = graph_dl(N1, N2, rho)
        dl_set = trunc_hausdorff(C, D, rho)
        rows.append({"t": t, "dl_gph": dl_gph, "dl_set": dl_set,
                     "ratio": dl_gph / math.sqrt(dl_set) if dl_set > 0 else INF})
    return rows


# ---------------------------------------------------------------------------
# difference-of-convex optimality conditions
# ---------------------------------------------------------------------------

def _sampled_subdiff(f, x, extent, step):
    sd = f.subdifferential(x)
    if sd is None:
        return np.zeros(0)
    lo, hi = max(sd[0], -extent), min(sd[1], extent)
    return lattice(lo, hi, step) if lo <= hi else np.zeros(0)


def dc_graph(f1, f2, xs, vs, extent, step):
    """gph of S(x, v) = (df1(x) - v, df2(x) - v) as a cloud in sup-norm R^4."""
    rows = []
    for x in xs:
        A = _sampled_subdiff(f1, x, extent, step)
        B = _sampled_subdiff(f2, x, extent, step)
        if not len(A) or not len(B):
            continue
        ab = np.array([(a, b) for a in A for b in B])
        for v in vs:
            block = np.empty((len(ab), 4))
            block[:, 0] = x
            block[:, 1] = v
            block[:, 2:] = ab - v
            rows.append(block)
    P = np.vstack(rows) if rows else np.zeros((0, 4))
    return FiniteSet(MetricSpace.sup(4), P, "gph dc")


def dc_mapping_bound(f1, f2, g1, g2, rho, step=0.05, extent=None, tol=TAU):
    """Graphs of the DC stationarity mappings against pointwise subdifferential gaps."""
    extent = extent or 4 * rho + 1
    kinks = [k for f in (f1, f2, g1, g2) for k in f.kinks()]
    xs = _axis_nodes((-2 * rho, 2 * rho), step, kinks)
    vs = lattice(-2 * rho, 2 * rho, step)
    GS = dc_graph(f1, f2, xs, vs, extent, step)
    GT = dc_graph(g1, g2, xs, vs, extent, step)
    lhs = trunc_hausdorff(GS, GT, rho)
    sp = MetricSpace.euclidean(1)
    rhs = 0.0
    for x in xs[np.abs(xs) <= rho + 1e-12]:
        for f, g in ((f1, g1), (f2, g2)):
            A = FiniteSet(sp, _sampled_subdiff(f, x, extent, step).reshape(-1, 1))
            B = FiniteSet(sp, _sampled_subdiff(g, x, extent, step).reshape(-1, 1))
            rhs = max(rhs, trunc_hausdorff(A, B, 2 * rho))
    rep = BoundReport("dc", lhs, rhs, tol=tol + step, details={"nodes": len(xs), "step": step})
    rep.add_condition("extent covers the doubled ball", extent >= 2 * rho, extent)
    return rep


# ---------------------------------------------------------------------------
# KKT systems
# ---------------------------------------------------------------------------

def problem_gradients(p):
    """Gradients of (f0, f1, ..., fm) at the grid nodes, with their provenance."""
    fns = (p.objective,) + p.constraints
    X = p.objective.nodes
    n = p.space.dim
    if p.gradients:
        if len(p.gradients) != len(fns):
            raise InputError("one gradient per objective/constraint required")
        out = []
        for gfun in p.gradients:
            arg = X[:, 0] if n == 1 else X
            out.append(np.asarray(gfun(arg), float).reshape(len(X), n))
        return out, "analytic"
    h = min(s for s in p.objective.spacing if s > 0) / 10
    out = []
    source = "central differences"
    for fn in fns:
        if fn.func is None:
            grads = np.gradient(fn.grid_values(), *[s for s in fn.spacing], edge_order=2)
            grads = grads if isinstance(grads, (list, tuple)) else [grads]
            out.append(np.stack([g.ravel() for g in grads], axis=1))
            source = "grid differences"
            continue
        G = np.empty((len(X), n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            hi, lo = fn(X + e), fn(X - e)
            G[:, k] = (hi - lo) / (2 * h)
        out.append(G)
    return out, source


def _kkt_data(p, grads, ys):
    """Per (x, y) node: x, y, f_i(x), w = y f(x), s = grad f0 + sum y_i grad f_i."""
    X = p.objective.nodes
    m = p.m
    F = np.stack([c.values for c in p.constraints], axis=1)
    nx, ny = len(X), len(ys)
    Xr = np.repeat(X, ny, axis=0)
    Yr = np.tile(ys, (nx, 1))
    Fr = np.repeat(F, ny, axis=0)
    W = Yr * Fr
    S = np.repeat(grads[0], ny, axis=0)
    for i in range(m):
        S = S + Yr[:, i:i + 1] * np.repeat(grads[i + 1], ny, axis=0)
    return Xr, Yr, Fr, W, S


def _multiplier_grid(m, y_max, y_step):
    axis = lattice(0.0, y_max, y_step)
    return np.stack(np.meshgrid(*[axis] * m, indexing="ij"), axis=-1).reshape(-1, m)


def _kkt_excess_exact(src, tgt, rho):
    """exs(gph S cap B(rho); gph T) for KKT graphs with half-line components."""
    Xs, Ys, Fs, Ws, Ss = src
    Xt, Yt, Ft, Wt, St = tgt
    norm = np.maximum.reduce([np.abs(Xs).max(1), np.abs(Ys).max(1), np.abs(Ws).max(1),
                              np.abs(Ss).max(1)])
    keep = (norm <= rho * (1 + 1e-12)) & (Fs.max(1) <= rho * (1 + 1e-12))
    if not keep.any():
        return 0.0
    Xs, Ys, Ws, Ss = Xs[keep], Ys[keep], Ws[keep], Ss[keep]
    U = np.maximum(Fs[keep], -rho)   # lowest admissible u
    V = np.minimum(Ys, rho)          # highest admissible v
    T = np.hstack([Xt, Yt, Wt, St])
    worst = 0.0
    chunk = max(1, 2_000_000 // max(1, len(Xt)))
    for s in range(0, len(Xs), chunk):
        sl = slice(s, s + chunk)
        P = np.hstack([Xs[sl], Ys[sl], Ws[sl], Ss[sl]])
        D = np.abs(P[:, None, :] - T[None, :, :]).max(-1)
        D = np.maximum(D, np.maximum(Ft[None, :, :] - U[sl][:, None, :], 0).max(-1))
        D = np.maximum(D, np.maximum(V[sl][:, None, :] - Yt[None, :, :], 0).max(-1))
        worst = max(worst, float(D.min(axis=1).max()))
    return worst


def kkt_cloud(p, grads, ys, extent, step):
    """Sampled gph S: u_i in [f_i, f_i + extent], v_i in [y_i - extent, y_i]."""
    Xr, Yr, Fr, W, S = _kkt_data(p, grads, ys)
    m = p.m
    rows = []
    for j in range(len(Xr)):
        us = [lattice(Fr[j, i], Fr[j, i] + extent, step) for i in range(m)]
        vs = [lattice(Yr[j, i] - extent, Yr[j, i], step) for i in range(m)]
        U = np.stack(np.meshgrid(*us, indexing="ij"), -1).reshape(-1, m)
        Vv = np.stack(np.meshgrid(*vs, indexing="ij"), -1).reshape(-1, m)
        iu = np.repeat(np.arange(len(U)), len(Vv))
        iv = np.tile(np.arange(len(Vv)), len(U))
        k = len(iu)
        rows.append(np.hstack([np.repeat(Xr[j:j + 1], k, 0), np.repeat(Yr[j:j + 1], k, 0),
                               U[iu], Vv[iv], np.repeat(W[j:j + 1], k, 0),
                               np.repeat(S[j:j + 1], k, 0)]))
    P = np.vstack(rows)
    return FiniteSet(MetricSpace.sup(P.shape[1]), P, "gph kkt")


def kkt_mapping(p, y_max, y_step=None, extent=None):
    """Sampled KKT graph cloud of p as a FiniteSet in sup-norm R^{n+m} x R^{3m+n}."""
    y_step = y_step or min(s for s in p.objective.spacing if s > 0)
    extent = extent or 2 * y_max + 1
    grads, _ = problem_gradients(p)
    return kkt_cloud(p, grads, _multiplier_grid(p.m, y_max, y_step), extent, y_step)


def check_kkt_bound(pf, pg, rho, y_max=None, y_step=None, mode="exact", extent=None, tol=TAU):
    """dl_rho of the KKT graphs against max(delta, rho delta, (1 + m rho) eta).

    mode 'exact' treats the half-line components [f_i(x), inf) and
    (-inf, y_i] in closed form; 'sampled' samples them to ``extent``.
    """
    if pf.m != pg.m or pf.m == 0:
        raise InputError("problems need the same positive number of constraints")
    if not pf.objective.same_grid(pg.objective):
        raise InputError("problems must share a grid")
    m = pf.m
    y_max = rho if y_max is None else y_max
    h = min(s for s in pf.objective.spacing if s > 0)
    y_step = y_step or h
    ys = _multiplier_grid(m, y_max, y_step)
    gf, src_f = problem_gradients(pf)
    gg, src_g = problem_gradients(pg)
    X = pf.objective.nodes
    ball = np.abs(X).max(axis=1) <= rho * (1 + 1e-12)
    delta = max(float(np.abs(a.values[ball] - b.values[ball]).max())
                for a, b in zip((pf.objective,) + pf.constraints, (pg.objective,) + pg.constraints))
    eta = max(float(np.abs(a[ball] - b[ball]).max()) for a, b in zip(gf, gg))
    rhs = max(delta, rho * delta, (1 + m * rho) * eta)
    slack = 0.0
    if mode == "exact":
        A, B = _kkt_data(pf, gf, ys), _kkt_data(pg, gg, ys)
        lhs = max(_kkt_excess_exact(A, B, rho), _kkt_excess_exact(B, A, rho))
    elif mode == "sampled":
        extent = extent or 2 * rho + 1
        CS = kkt_cloud(pf, gf, ys, extent, y_step)
        CT = kkt_cloud(pg, gg, ys, extent, y_step)
        lhs = trunc_hausdorff(CS, CT, rho)
        slack = y_step
    else:
        raise InputError(f"unknown mode {mode!r}")
    rep = BoundReport("kkt", lhs, rhs, tol=tol + slack, details={
        "delta": delta, "eta": eta, "mode": mode, "y_max": y_max, "y_step": y_step,
        "gradients": src_f if src_f == src_g else f"{src_f}/{src_g}"})
    rep.add_condition("multiplier box covers B(rho)", y_max >= rho - 1e-12, y_max)
    return rep


# ---------------------------------------------------------------------------
# composite functions
# ---------------------------------------------------------------------------

_NORM_PAIRS = {"linf": ("induced-inf",), "l2": ("spectral", "frobenius")}


def _matrix_norm(M, which):
    if which == "induced-inf":
        return float(np.abs(M).sum(axis=1).max())
    if which == "spectral":
        return float(np.linalg.norm(M, 2))
    return float(np.linalg.norm(M, "fro"))


def _fd_gradient(F, X, h):
    n = X.shape[1]
    G = np.empty_like(X)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        G[:, k] = (np.asarray(F(X + e)) - np.asarray(F(X - e))) / (2 * h)
    return G


def _composite_cloud(F, JF, xs, ys, sub):
    """Points (x, y, z, F(x) - z, s - y, JF(x)^T y) for (z, s) in gph d(phi)."""
    Fx = np.asarray(F(xs), float)
    nx, ny, nz = len(xs), len(ys), len(sub)
    n = xs.shape[1]
    ix = np.repeat(np.arange(nx), ny * nz)
    iy = np.tile(np.repeat(np.arange(ny), nz), nx)
    iz = np.tile(np.arange(nz), nx * ny)
    y = ys[iy]
    z, s = sub[iz, 0], sub[iz, 1]
    P = np.empty((len(ix), 2 * n + 4))
    P[:, :n] = xs[ix]
    P[:, n] = y
    P[:, n + 1] = z
    P[:, n + 2] = Fx[ix] - z
    P[:, n + 3] = s - y
    P[:, n + 4:] = JF[ix] * y[:, None]
    return P


def composite_stationarity_bound(phi, psi, F, G, rho, step, n=1, JF=None, JG=None,
                                 norm="linf", matrix_norm=None, tol=TAU):
    """Stationarity mappings of phi(F(x)) and psi(G(x)) with scalar outer functions.

    F, G take an (N, n) array and return N values; JF, JG return (N, n)
    gradients (central differences with step/10 when omitted).
    """
    matrix_norm = matrix_norm or _NORM_PAIRS.get(norm, ("?",))[0]
    if norm not in _NORM_PAIRS or matrix_norm not in _NORM_PAIRS[norm]:
        raise InputError(f"matrix norm {matrix_norm!r} is not compatible with vector norm {norm!r}")
    axis = lattice(-rho, rho, step)
    xs = np.stack(np.meshgrid(*[axis] * n, indexing="ij"), -1).reshape(-1, n)
    ys = lattice(-rho, rho, step)
    provenance = "analytic"
    if JF is None or JG is None:
        provenance = "central differences"
    JFx = np.asarray(JF(xs), float).reshape(-1, n) if JF else _fd_gradient(F, xs, step / 10)
    JGx = np.asarray(JG(xs), float).reshape(-1, n) if JG else _fd_gradient(G, xs, step / 10)
    extent = 2 * rho + 1
    zbox = (-2 * rho, 2 * rho)
    kinks = list(phi.kinks()) + list(psi.kinks())
    sub_phi = subgradient_graph(phi, extent, step, zbox, kinks).graph()
    sub_psi = subgradient_graph(psi, extent, step, zbox, kinks).graph()
    vec = MetricSpace(n, norm) if n > 1 else MetricSpace.euclidean(1)
    one = MetricSpace.euclidean(1)
    space = MetricSpace.product(vec, one, one, one, one, vec)
    CS = FiniteSet(space, _composite_cloud(F, JFx, xs, ys, sub_phi.points))
    CT = FiniteSet(space, _composite_cloud(G, JGx, xs, ys, sub_psi.points))
    lhs = trunc_hausdorff(CS, CT, rho)
    dl_sub = trunc_hausdorff(sub_phi, sub_psi, 2 * rho)
    in_ball = vec.in_ball(xs, rho)
    gap = np.abs(np.asarray(G(xs), float) - np.asarray(F(xs), float))
    jac = np.array([_matrix_norm((JGx[j] - JFx[j]).reshape(n, 1), matrix_norm)
                    for j in range(len(xs))])
    rhs = float(np.max(np.maximum(gap + dl_sub, rho * jac)[in_ball]))
    return BoundReport("composite", lhs, rhs, tol=tol + step, details={
        "dl_subgradients": dl_sub, "sup_value_gap": float(gap[in_ball].max()),
        "sup_jacobian_gap": float(jac[in_ball].max()), "jacobians": provenance,
        "norm": norm, "matrix_norm": matrix_norm, "points": len(CS)})


def random_mapping(rng, lo=-1.0, hi=1.0, step=0.05):
    """Random piecewise-linear single- or interval-valued mapping on [lo, hi]."""
    xs = lattice(lo, hi, step)
    k = int(rng.integers(1, 4))
    knots = np.sort(rng.uniform(lo, hi, k))
    coef = rng.uniform(-1.5, 1.5, k + 1)
    base = coef[0] * xs + sum(c * np.maximum(0, xs - t) for c, t in zip(coef[1:], knots))
    base = base + rng.uniform(-0.5, 0.5)
    width = rng.uniform(0, 0.4) if rng.random() < 0.5 else 0.0
    vals = tuple(lattice(b, b + width, step).reshape(-1, 1) for b in base)
    sp = MetricSpace.euclidean(1)
    return GriddedMapping(sp, sp, xs.reshape(-1, 1), vals, "random", 0.0)


def perturb_mapping(S, rng, size=0.2):
    """A random nearby mapping: shifted values and a dropped fraction of nodes."""
    shift = rng.uniform(-size, size)
    drop = rng.random(len(S)) < 0.1
    vals = tuple(np.zeros((0, 1)) if d else v + shift + rng.uniform(-size, size) / 4
                 for v, d in zip(S.values, drop))
    if all(len(v) == 0 for v in vals):
        vals = S.values
    return GriddedMapping(S.domain, S.codomain, S.nodes, vals, "perturbed", 0.0)

