"""Derived sets and checkers for the set-distance calculus.

Each ``check_*`` evaluates both sides of an inequality on finite data and
returns a :class:`BoundReport`.  Side conditions are evaluated on the same
data; when one fails the report is marked not applicable instead of failing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from . import _polygon
from .errors import InputError, PreconditionError, UnsupportedError
from .metric_core import (INF, FiniteSet, MetricSpace, ball_intersect,
                          dist_to_centroid, excess, ext_add, lattice, nearest,
                          sample_ray, trunc_hausdorff, union_points)
from .report import BoundReport

TAU = 1e-9


def auto_radius(need):
    """A radius strictly above ``need`` with a small relative margin."""
    if need == INF:
        return INF
    return need * (1 + 1e-3) + 1e-3


def _same_space(*sets):
    for s in sets[1:]:
        if s.space != sets[0].space:
            raise InputError("sets live in different spaces")


# ---------------------------------------------------------------------------
# triangle inequality
# ---------------------------------------------------------------------------

def check_triangle(C1, C2, C3, rho, rho_bar=None, tol=TAU):
    _same_space(C1, C2, C3)
    need = 2 * rho + max(dist_to_centroid(C) for C in (C1, C2, C3))
    if rho_bar is None:
        rho_bar = auto_radius(need)
    lhs = trunc_hausdorff(C1, C3, rho)
    rhs = ext_add(trunc_hausdorff(C1, C2, rho_bar), trunc_hausdorff(C2, C3, rho_bar))
    rep = BoundReport("triangle", lhs, rhs, tol=tol,
                      details={"rho": rho, "rho_bar": rho_bar})
    rep.add_condition("rho_bar > 2rho + max dist(ctr, C_i)", rho_bar > need, need)
    return rep


# ---------------------------------------------------------------------------
# products and indicator epigraphs
# ---------------------------------------------------------------------------

def product_set(Cs, label="product"):
    Cs = list(Cs)
    if not Cs:
        raise InputError("empty factor list")
    space = MetricSpace.product(*[C.space for C in Cs])
    if any(C.empty for C in Cs):
        return FiniteSet(space, np.zeros((0, space.dim)), label)
    grids = np.meshgrid(*[np.arange(len(C)) for C in Cs], indexing="ij")
    idx = [g.ravel() for g in grids]
    P = np.concatenate([C.points[i] for C, i in zip(Cs, idx)], axis=1)
    return FiniteSet(space, P, label)


def check_product(Cs, Ds, rho, tol=TAU, slack=0.0):
    """Product rule; equality is asserted when both truncated products are nonempty."""
    Cs, Ds = list(Cs), list(Ds)
    if not Cs or len(Cs) != len(Ds):
        raise InputError("factor lists must be nonempty and of equal length")
    for C, D in zip(Cs, Ds):
        _same_space(C, D)
    C = product_set(Cs)
    D = product_set(Ds)
    lhs = trunc_hausdorff(C, D, rho)
    rhs = max(trunc_hausdorff(c, d, rho) for c, d in zip(Cs, Ds))
    c_ne = not ball_intersect(C, rho).empty
    d_ne = not ball_intersect(D, rho).empty
    rel = "eq" if (c_ne and d_ne) else "le"
    return BoundReport("product", lhs, rhs, relation=rel, tol=tol + slack,
                       details={"C_ball_nonempty": c_ne, "D_ball_nonempty": d_ne,
                                "slack": slack})


def indicator_epigraph(C, rho, vstep):
    """Cloud {(x, a): x in C, a on the vertical lattice of [0, rho]}."""
    levels = lattice(0.0, rho, vstep) if rho > 0 else np.array([0.0])
    space = MetricSpace.product(C.space, MetricSpace.euclidean(1))
    if C.empty:
        return FiniteSet(space, np.zeros((0, space.dim)), f"epi_ind({C.label})")
    P = np.concatenate([np.repeat(C.points, len(levels), axis=0),
                        np.tile(levels, len(C)).reshape(-1, 1)], axis=1)
    return FiniteSet(space, P, f"epi_ind({C.label})")


def check_indicator(C, D, rho, vstep=0.1, tol=TAU):
    _same_space(C, D)
    lhs = trunc_hausdorff(indicator_epigraph(C, rho, vstep), indicator_epigraph(D, rho, vstep), rho)
    rhs = trunc_hausdorff(C, D, rho)
    return BoundReport("indicator", lhs, rhs, relation="eq", tol=tol,
                       details={"vstep": vstep})


# ---------------------------------------------------------------------------
# unions and intersections
# ---------------------------------------------------------------------------

def union_set(Cs, label="union"):
    return union_points(Cs, label)


def check_union(Cs, Ds, rho, tol=TAU):
    Cs, Ds = list(Cs), list(Ds)
    if len(Cs) != len(Ds):
        raise InputError("Cs and Ds must have the same length")
    if not Cs:
        raise InputError("empty family")
    lhs = trunc_hausdorff(union_set(Cs), union_set(Ds), rho)
    rhs = max(trunc_hausdorff(C, D, rho) for C, D in zip(Cs, Ds))
    return BoundReport("union", lhs, rhs, tol=tol)


def intersect_sets(Cs, tol=TAU, label="intersection"):
    """Points of the first set lying within ``tol`` of every other set."""
    Cs = list(Cs)
    if not Cs:
        raise InputError("empty family")
    _same_space(*Cs)
    P = Cs[0].points
    keep = np.ones(len(P), bool)
    for C in Cs[1:]:
        if len(P):
            keep &= nearest(C.space, P, C.points) <= tol
    return FiniteSet(Cs[0].space, P[keep], label)


def intersection_outer(Cs, Ds, domain=None, tol=TAU):
    """Sampled version of the intersection of the enlarged sets D_a^+.

    D_a^+ collects the domain points within exs(C_a; D_a) of D_a.  The domain
    is the union of ``domain`` (if given) with all points of the C_a and D_a.
    """
    Cs, Ds = list(Cs), list(Ds)
    if not Cs or len(Cs) != len(Ds):
        raise InputError("nonempty lists of equal length required")
    pool = Cs + Ds + ([domain] if domain is not None else [])
    dom = union_points(pool).unique()
    keep = np.ones(len(dom), bool)
    radii = []
    for C, D in zip(Cs, Ds):
        r = excess(C, D)
        radii.append(r)
        keep &= nearest(D.space, dom.points, D.points) <= r + 2 * tol
    out = FiniteSet(dom.space, dom.points[keep], "outer")
    out.meta["radii"] = radii
    return out


def check_intersection_outer(Cs, Ds, domain=None, tol=TAU):
    outer = intersection_outer(Cs, Ds, domain, tol)
    inner = intersect_sets(Cs, tol)
    lhs = excess(inner, outer)
    return BoundReport("intersection-outer", lhs, 0.0, tol=tol,
                       details={"outer_size": len(outer), "intersection_size": len(inner)})


# ---------------------------------------------------------------------------
# convex hulls
# ---------------------------------------------------------------------------

def _simplex_lattice(k, m):
    """Barycentric weights with denominators m for a k-vertex simplex."""
    combos = [c for c in itertools.product(range(m + 1), repeat=k - 1) if sum(c) <= m]
    W = np.array([list(c) + [m - sum(c)] for c in combos], float) / m
    return W


def _affine_frame(P):
    """Basis of the affine hull of P (origin, rows of an orthonormal basis)."""
    origin = P.mean(axis=0)
    _, s, vt = np.linalg.svd(P - origin, full_matrices=False)
    scale = max(1.0, float(np.abs(P).max()))
    rank = int(np.sum(s > 1e-10 * scale * max(1, len(P))))
    return origin, vt[:rank]


def hull_samples(C, resolution=8):
    """Carathéodory lattice sampling of con C.

    Returns (points, slack) where every point of the hull lies within
    ``slack`` of the samples (in the space's metric, bounded via the sup of
    simplex diameters).
    """
    m = int(resolution)
    if m < 1:
        raise InputError("resolution must be >= 1")
    P = np.unique(C.points, axis=0)
    if len(P) <= 1:
        return P, 0.0
    origin, basis = _affine_frame(P)
    r = len(basis)
    if r == 0:
        return P[:1], 0.0
    Q = (P - origin) @ basis.T
    if r == 1:
        t = Q[:, 0]
        lo, hi = P[np.argmin(t)], P[np.argmax(t)]
        w = np.linspace(0, 1, m + 1)[:, None]
        S = lo + w * (hi - lo)
        diam = float(C.space.dist(lo, hi))
        return np.vstack([S, P]), diam / m
    try:
        tri = Delaunay(Q)
        simplices = tri.simplices
    except QhullError:
        simplices = np.array(list(itertools.combinations(range(len(P)), r + 1)))
    W = _simplex_lattice(r + 1, m)
    S = np.einsum("wk,skd->swd", W, P[simplices]).reshape(-1, P.shape[1])
    diam = 0.0
    for s in simplices:
        V = P[s]
        diam = max(diam, float(C.space.pair_dist(V, V).max()))
    return np.vstack([S, P]), r * diam / m


def convex_hull(C, resolution=8):
    """Finite sample of the convex hull of C (see :func:`hull_samples`)."""
    S, slack = hull_samples(C, resolution)
    out = FiniteSet(C.space, S, f"con({C.label})")
    out.meta["slack"] = slack
    return out


def _hull_excess_exact(C, D, rho):
    """exs(con C cap B(rho); con D) for dimension 1 or 2."""
    space = C.space
    if C.empty:
        return 0.0
    if D.empty:
        return INF
    if space.dim == 1:
        ctr = space.centroid[0]
        a, b = max(C.points.min(), ctr - rho), min(C.points.max(), ctr + rho)
        if a > b:
            return 0.0
        lo, hi = D.points.min(), D.points.max()
        return max(max(lo - a, a - hi, 0.0), max(lo - b, b - hi, 0.0))
    kind = space.kind
    if space.dim != 2 or kind is None:
        raise UnsupportedError("exact hull distances need dimension <= 2 and an l2/sup norm")
    VC = _polygon.hull_2d(C.points)
    VD = _polygon.hull_2d(D.points)
    E = _polygon.clipped_extremes(VC, rho, kind, space.centroid)
    if len(E) == 0:
        return 0.0
    return float(_polygon.dist_points_polygon(E, VD, kind).max())


def hull_distance(C, D, rho, mode="auto", resolution=8):
    """dl_rho(con C, con D); returns (value, slack, mode_used)."""
    _same_space(C, D)
    if mode == "auto":
        mode = "exact" if C.space.dim <= 2 and C.space.kind is not None else "sampled"
    if mode == "exact":
        v = max(_hull_excess_exact(C, D, rho), _hull_excess_exact(D, C, rho))
        slack = 0.0
        if C.space.dim == 2 and C.space.kind == "l2":
            # arc sampling of the disk boundary
            slack = rho * (1 - math.cos(math.pi / 2048))
        return v, slack, "exact"
    if mode != "sampled":
        raise InputError(f"unknown hull mode {mode!r}")
    SC, sc = convex_hull(C, resolution), None
    SD = convex_hull(D, resolution)
    sc = max(SC.meta["slack"], SD.meta["slack"])
    return trunc_hausdorff(SC, SD, rho), sc, "sampled"


def check_hull(C, D, rho, mode="auto", resolution=8, tol=TAU):
    lhs, slack, used = hull_distance(C, D, rho, mode, resolution)
    rhs = trunc_hausdorff(C, D, rho)
    nc = C.norms().max() if not C.empty else 0.0
    nd = D.norms().max() if not D.empty else 0.0
    rep = BoundReport("hull", lhs, rhs, tol=tol + slack,
                      details={"mode": used, "slack": slack})
    rep.add_condition("C, D inside B(rho)", max(nc, nd) <= rho * (1 + 1e-12), max(nc, nd))
    return rep


# ---------------------------------------------------------------------------
# images under Lipschitz set-valued mappings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LipschitzSetMap:
    """Set-valued mapping given by an evaluator x -> array of image points.

    ``modulus`` is a number or a nondecreasing callable rho -> kappa(rho),
    declared relative to ``relative_radius``.
    """
    evaluator: object
    codomain: MetricSpace
    modulus: object = 1.0
    relative_radius: float = INF
    name: str = ""

    def kappa(self, rho):
        m = self.modulus
        return float(m(rho)) if callable(m) else float(m)

    def __call__(self, x) -> FiniteSet:
        pts = np.asarray(self.evaluator(np.asarray(x, float)), float)
        pts = pts.reshape(-1, self.codomain.dim)
        return FiniteSet(self.codomain, pts, self.name)


def operator_norm(A, kind):
    A = np.atleast_2d(np.asarray(A, float))
    if kind == "l2":
        return float(np.linalg.norm(A, 2))
    return float(np.abs(A).sum(axis=1).max())


def affine_set_map(A, offsets, domain, codomain=None, name="affine"):
    """S(x) = {A x + b_k}: Lipschitz with the operator norm of A, relative to inf."""
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(offsets, float))
    codomain = codomain or MetricSpace(A.shape[0], domain.norm if domain.norm != "product" else "linf")
    kind = codomain.kind or "linf"
    if domain.kind != kind and domain.dim > 1:
        kappa = operator_norm(A, "l2") * math.sqrt(domain.dim) + operator_norm(A, "linf")
    else:
        kappa = operator_norm(A, kind)

    def ev(x):
        return (A @ x)[None, :] + B

    return LipschitzSetMap(ev, codomain, kappa, INF, name)


def image_set(S, C, label=None):
    if C.empty:
        return FiniteSet(S.codomain, np.zeros((0, S.codomain.dim)), label or "image")
    parts = []
    for x in C.points:
        v = S(x)
        if v.empty:
            raise PreconditionError(f"mapping {S.name!r} is empty at {x.tolist()}")
        parts.append(v.points)
    return FiniteSet(S.codomain, np.concatenate(parts), label or f"{S.name}({C.label})")


def _pairs(n, budget, seed=0):
    if n * (n - 1) // 2 <= budget:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng(seed)
    I = rng.integers(0, n, size=budget)
    J = rng.integers(0, n, size=budget)
    return [(i, j) for i, j in zip(I, J) if i != j]


def validate_set_map_modulus(S, X: FiniteSet, rho_star, tol=TAU, budget=5000):
    """Check dl_{rho*}(S(x), S(x')) <= kappa(r) d(x, x') + tol on pairs of X.

    r is the larger norm of the pair.  Returns the worst violation (<= 0 when
    the modulus is confirmed).
    """
    vals = [S(x) for x in X.points]
    norms = X.norms()
    worst = -INF
    for i, j in _pairs(len(X), budget):
        d = X.space.dist(X.points[i], X.points[j])
        lhs = trunc_hausdorff(vals[i], vals[j], rho_star)
        rhs = S.kappa(max(norms[i], norms[j])) * d
        worst = max(worst, lhs - rhs)
    return worst if worst > -INF else 0.0


def _preimage_radius(U, E, rho_star):
    """sup over y in U(E) cap B(rho*) of inf{|x| : x in E, y in U(x)}."""
    best = {}
    for x, nx in zip(E.points, E.norms()):
        Y = U(x)
        if Y.empty:
            raise PreconditionError(f"mapping {U.name!r} is empty at {x.tolist()}")
        keep = Y.norms() <= rho_star * (1 + 1e-12) if rho_star < INF else np.ones(len(Y), bool)
        for y in Y.points[keep]:
            key = tuple(np.round(y, 12))
            best[key] = min(best.get(key, INF), float(nx))
    return max(best.values()) if best else 0.0


def check_lipschitz_image(S, T, C, D, radii, probes=None, tol=TAU, budget=5000):
    """Images of C, D under S, T versus the sup-term plus kappa times dl(C, D)."""
    if C.empty or D.empty:
        raise InputError("C and D must be nonempty")
    rho = radii.rho
    SC, SD, TD = image_set(S, C), image_set(S, D), image_set(T, D)
    need_star = 2 * rho + max(dist_to_centroid(SC), dist_to_centroid(SD), dist_to_centroid(TD))
    rho_star = radii.rho_star
    if rho_star is None:
        rho_star = auto_radius(need_star)
        declared = min(S.relative_radius, T.relative_radius)
        if rho_star > declared:
            rho_star = declared
    need_bar = 0.0
    for U in (S, T):
        for E in (C, D):
            need_bar = max(need_bar, _preimage_radius(U, E, rho_star))
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    dl_bar = trunc_hausdorff(C, D, rho_bar)
    need_hat = rho_bar + dl_bar
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)

    kappa = max(S.kappa(rho_hat), T.kappa(rho_hat))
    pool = ball_intersect(union_points([C, D]).unique(), rho_hat)
    for U in (S, T):
        worst = validate_set_map_modulus(U, pool, rho_star, tol, budget)
        if worst > tol * 10:
            raise PreconditionError(
                f"declared modulus of {U.name!r} violated by {worst:.3g}")

    if probes is None:
        probes = ball_intersect(union_points([C, D]).unique(), rho_bar)
    sup_term = 0.0
    for x in probes.points:
        sup_term = max(sup_term, trunc_hausdorff(S(x), T(x), rho_star))

    lhs = trunc_hausdorff(image_set(S, C), TD, rho)
    rhs = ext_add(sup_term, kappa * dl_bar if dl_bar < INF else INF)
    rep = BoundReport("lipschitz-image", lhs, rhs, tol=tol, details={
        "rho": rho, "rho_star": rho_star, "rho_bar": rho_bar, "rho_hat": rho_hat,
        "kappa": kappa, "sup_term": sup_term, "dl_bar": dl_bar, "probes": len(probes)})
    rep.add_condition("S, T nonempty-valued", True)
    rep.add_condition("rho* > 2rho + max dist(ctr, images)", rho_star > need_star, need_star)
    rep.add_condition("rho_bar exceeds preimage radius", rho_bar > need_bar and rho_bar > 0, need_bar)
    rep.add_condition("rho_hat > rho_bar + dl_bar(C, D)", rho_hat > need_hat, need_hat)
    return rep


# ---------------------------------------------------------------------------
# Minkowski sums and scalings
# ---------------------------------------------------------------------------

def minkowski_sum(Cs, within=None, label="sum"):
    """Elementwise sums; with ``within`` only sums in B(within) are kept."""
    Cs = list(Cs)
    if not Cs:
        raise InputError("empty family")
    _same_space(*Cs)
    space = Cs[0].space
    P = Cs[0].points
    for i, C in enumerate(Cs[1:], start=1):
        parts = []
        step = max(1, 500_000 // max(1, len(C)))
        for s in range(0, len(P), step):
            Q = (P[s:s + step, None, :] + C.points[None, :, :]).reshape(-1, space.dim)
            if within is not None and i == len(Cs) - 1:
                Q = Q[space.in_ball(Q, within)]
            parts.append(Q)
        P = np.concatenate(parts) if parts else np.zeros((0, space.dim))
    if within is not None and len(Cs) == 1:
        P = P[space.in_ball(P, within)]
    return FiniteSet(space, P, label)


def _inside_ball(C, rho):
    return C.empty or bool(C.norms().max() <= rho * (1 + 1e-12))


def check_sum(Cs, Ds, rho, tol=TAU, unbounded=None):
    """Sum rule.  At most one pair may leave B(rho); it is then compared at m*rho.

    ``unbounded`` optionally lists pair indices known to represent unbounded
    sets (e.g. sampled rays), in addition to those detected from the data.
    """
    Cs, Ds = list(Cs), list(Ds)
    if not Cs or len(Cs) != len(Ds):
        raise InputError("nonempty lists of equal length required")
    if any(C.empty for C in Cs + Ds):
        raise InputError("all sets must be nonempty")
    m = len(Cs)
    flags = [not (_inside_ball(C, rho) and _inside_ball(D, rho)) for C, D in zip(Cs, Ds)]
    for i in unbounded or ():
        flags[i] = True
    bad = [i for i, f in enumerate(flags) if f]
    if len(bad) >= 2:
        raise UnsupportedError(
            "two or more pairs leave B(rho); the sum rule fails there "
            "(see two_rays_counterexample)")
    order = bad + [i for i in range(m) if i not in bad]
    terms = []
    for k, i in enumerate(order):
        r = m * rho if (k == 0 and bad) else rho
        terms.append(trunc_hausdorff(Cs[i], Ds[i], r))
    lhs = trunc_hausdorff(minkowski_sum(Cs), minkowski_sum(Ds), rho)
    rhs = 0.0
    for t in terms:
        rhs = ext_add(rhs, t)
    rep = BoundReport("sum", lhs, rhs, tol=tol,
                      details={"unbounded_pair": bad[0] if bad else None,
                               "bounded_flags": [not f for f in flags]})
    rep.add_condition("at most one pair outside B(rho)", True, len(bad))
    return rep


def two_rays_counterexample(delta=0.1, rho=5.0, extent=100.0, step=0.1):
    """Two pairs of rays in the plane where the sum rule breaks down.

    Returns a report with lhs = dl(C1 + C2, D1 + D2) and rhs = 2*delta*rho
    (the sum of the componentwise bounds); the side condition is recorded as
    failing since both pairs are unbounded.
    """
    sp = MetricSpace.euclidean(2)
    o = (0.0, 0.0)
    C1 = FiniteSet(sp, sample_ray(o, (1, 1 + delta), extent, step), "C1")
    C2 = FiniteSet(sp, sample_ray(o, (-1, -1 + delta), extent, step), "C2")
    D1 = FiniteSet(sp, sample_ray(o, (1, 1), extent, step), "D1")
    D2 = FiniteSet(sp, sample_ray(o, (-1, -1), extent, step), "D2")
    # any point of either truncated sum has a partner within rho of the origin,
    # so sums outside B(3 rho) never matter
    SC = minkowski_sum([C1, C2], within=3 * rho)
    SD = minkowski_sum([D1, D2], within=3 * rho)
    lhs = trunc_hausdorff(SC, SD, rho)
    comp = [trunc_hausdorff(C1, D1, rho), trunc_hausdorff(C2, D2, rho)]
    rep = BoundReport("sum-two-rays", lhs, 2 * delta * rho, tol=TAU, details={
        "componentwise_dl": comp, "delta": delta, "rho": rho, "extent": extent,
        "step": step})
    rep.add_condition("at most one pair outside B(rho)", False, 2)
    return rep


def scale_set(C, lam, label=None):
    lam = float(lam)
    if lam == 0:
        raise InputError("scalar must be nonzero")
    return FiniteSet(C.space, lam * C.points, label or f"{lam:g}*{C.label}")


def check_scaling(C, D, lam, mu, rho, rho_bar=None, tol=TAU):
    if lam == 0 or mu == 0:
        raise InputError("scalars must be nonzero")
    if C.empty or D.empty:
        raise InputError("C and D must be nonempty")
    _same_space(C, D)
    a, b = abs(lam), abs(mu)
    need = (2 * rho + max(a * dist_to_centroid(C), a * dist_to_centroid(D),
                          b * dist_to_centroid(D))) * max(1 / a, 1 / b)
    if rho_bar is None:
        rho_bar = auto_radius(need)
    lhs = trunc_hausdorff(scale_set(C, lam), scale_set(D, mu), rho)
    rhs = ext_add(rho_bar * abs(lam - mu), max(a, b) * trunc_hausdorff(C, D, rho_bar))
    rep = BoundReport("scaling", lhs, rhs, tol=tol, details={"rho_bar": rho_bar})
    rep.add_condition("rho_bar above the scaling threshold", rho_bar > need, need)
    return rep


# ---------------------------------------------------------------------------
# level sets of convex functions
# ---------------------------------------------------------------------------

def check_convex_level_sets(f, g, alpha, beta, rho, rho0=None, rho_star=None,
                            tol=TAU, slack=None, budget=20000):
    """Distance between level sets of two convex gridded functions."""
    from .epigraph import (kenmochi_dl, level_set, solution_summary,
                           validate_midpoint_convexity)
    for fn in (f, g):
        bad = validate_midpoint_convexity(fn, tol=1e-9, budget=budget)
        if bad is not None:
            raise PreconditionError(f"{fn.name or 'function'} is not convex near {bad}")
    if slack is None:
        slack = max(f.mesh, g.mesh)
    eta = kenmochi_dl(f, g, rho)
    sf = solution_summary(f, [0.0])
    sg = solution_summary(g, [0.0])
    inf_f, inf_g = sf.infimum, sg.infimum
    am_f, am_g = sf.argmin_eps[0.0], sg.argmin_eps[0.0]
    r0_need = max(dist_to_centroid(am_f), dist_to_centroid(am_g))
    if rho0 is None:
        rho0 = r0_need
    rs_need = max(rho0, rho + eta)
    if rho_star is None:
        rho_star = rs_need
    lhs = trunc_hausdorff(level_set(f, alpha), level_set(g, beta), rho)

    def frac(a, b, inf_other):
        num = a + eta - b
        if num <= 0:
            return 0.0
        den = a + eta - inf_other
        return num / den if den > 0 else INF

    ratio = max(frac(alpha, beta, inf_g), frac(beta, alpha, inf_f))
    rhs = ext_add(eta, (rho_star + rho0) * ratio if ratio < INF else INF)
    rep = BoundReport("convex-level-sets", lhs, rhs, tol=tol + slack, details={
        "eta": eta, "rho0": rho0, "rho_star": rho_star, "inf_f": inf_f, "inf_g": inf_g})
    rep.add_condition("alpha, beta in [-rho, rho]", -rho <= min(alpha, beta) and max(alpha, beta) <= rho)
    rep.add_condition("alpha > inf f and beta > inf g", alpha > inf_f and beta > inf_g)
    rep.add_condition("argmins nonempty", not am_f.empty and not am_g.empty)
    rep.add_condition("rho0 >= dist(0, argmin)", rho0 >= r0_need, r0_need)
    rep.add_condition("rho* >= max(rho0, rho + eta)", rho_star >= rs_need, rs_need)
    return rep
