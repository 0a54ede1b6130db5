"""Extended-real functions on finite node sets and distances between epigraphs.

A function is stored by its values on finitely many nodes and is understood
to be +inf everywhere else.  Under that convention the Kenmochi-type formula
below gives the truncated Hausdorff distance between epigraphs exactly, so
the point-cloud construction in :func:`epi_cloud` is only used as an
independent cross-check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.spatial import cKDTree

from .errors import InputError, PreconditionError
from .metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, ext_absdiff,
                          ball_intersect, ext_add_arr, excess, nearest_brute, trunc_hausdorff)
from .report import BoundReport
from .set_calculus import TAU, auto_radius

_BRUTE_CHUNK = 4_000_000


# ---------------------------------------------------------------------------
# function representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodeFunction:
    """Values on scattered nodes; +inf off the nodes.

    ``infimum`` overrides the computed infimum, which models an open domain
    whose infimum is approached but not attained on the nodes.
    """
    space: MetricSpace
    nodes: np.ndarray
    values: np.ndarray
    name: str = ""
    infimum: float = None
    func: object = None

    def __post_init__(self):
        P = np.asarray(self.nodes, float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        if P.shape[1] != self.space.dim:
            raise InputError("node dimension does not match the space")
        v = np.asarray(self.values, float).ravel()
        if v.shape[0] != P.shape[0]:
            raise InputError("one value per node required")
        if np.isnan(v).any():
            raise InputError("function values contain NaN")
        for a in (P, v):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", P)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    @property
    def mesh(self):
        return 0.0

    @property
    def finite(self):
        return self.values < INF

    def with_values(self, values, name=None, func=None):
        return NodeFunction(self.space, self.nodes, values, name or self.name, None, func)

    def domain(self) -> FiniteSet:
        return FiniteSet(self.space, self.nodes[self.finite], f"dom {self.name}")

    def __call__(self, X):
        """Evaluate at arbitrary points: the callable if known, else node lookup."""
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.space.dim and self.space.dim == 1:
            X = X.reshape(-1, 1)
        if self.func is not None:
            return np.asarray(_call(self.func, X), float).reshape(-1)
        d, idx = cKDTree(self.nodes).query(X, p=np.inf)
        out = self.values[idx].copy()
        out[d > 1e-9] = INF
        return out


def _call(func, X):
    return func(X[:, 0]) if X.shape[1] == 1 else func(X)


@dataclass(frozen=True, eq=False)
class GriddedFunction(NodeFunction):
    """Values on the uniform lattice of an axis-aligned box (C order)."""
    lo: tuple = ()
    hi: tuple = ()
    shape: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if int(np.prod(self.shape)) != len(self.values):
            raise InputError("values do not match the grid shape")

    @classmethod
    def from_callable(cls, func, box, step, space=None, name="", infimum=None):
        """Sample ``func`` on the grid of ``box`` with spacing about ``step``.

        ``func`` receives a 1-D array in dimension one and an (N, n) array
        otherwise; it must return one value per node (inf allowed).
        """
        lo, hi, shape, axes = _grid_axes(box, step)
        space = space or MetricSpace.euclidean(len(lo))
        mesh = np.meshgrid(*axes, indexing="ij")
        X = np.stack([m.ravel() for m in mesh], axis=1)
        with np.errstate(all="ignore"):
            v = np.asarray(_call(func, X), float)
        v = np.broadcast_to(v, (X.shape[0],)).copy()
        return cls(space, X, v, name, infimum, func, lo, hi, shape)

    @classmethod
    def from_values(cls, values, box, step, space=None, name="", infimum=None):
        lo, hi, shape, axes = _grid_axes(box, step)
        space = space or MetricSpace.euclidean(len(lo))
        mesh = np.meshgrid(*axes, indexing="ij")
        X = np.stack([m.ravel() for m in mesh], axis=1)
        return cls(space, X, np.asarray(values, float).ravel(), name, infimum, None, lo, hi, shape)

    @property
    def spacing(self):
        return tuple((h - l) / (n - 1) if n > 1 else 0.0
                     for l, h, n in zip(self.lo, self.hi, self.shape))

    @property
    def mesh(self):
        return self.space.dist(np.zeros(self.space.dim), np.asarray(self.spacing))

    def same_grid(self, other):
        return (isinstance(other, GriddedFunction) and self.space == other.space
                and self.shape == other.shape and np.allclose(self.lo, other.lo)
                and np.allclose(self.hi, other.hi))

    def with_values(self, values, name=None, func=None):
        return GriddedFunction(self.space, self.nodes, values, name or self.name, None, func,
                               self.lo, self.hi, self.shape)

    def grid_values(self):
        return self.values.reshape(self.shape)

    def covers_ball(self, rho):
        ctr = np.asarray(self.space.centroid)
        return bool(np.all(np.asarray(self.lo) <= ctr - rho + 1e-12)
                    and np.all(np.asarray(self.hi) >= ctr + rho - 1e-12))


def _grid_axes(box, step):
    box = np.asarray(box, float)
    if box.ndim == 1:
        box = box.reshape(1, 2)
    n = box.shape[0]
    steps = np.broadcast_to(np.asarray(step, float), (n,))
    lo, hi, shape, axes = [], [], [], []
    for (a, b), h in zip(box, steps):
        if not (b >= a) or h <= 0:
            raise InputError("invalid grid box or step")
        k = max(1, int(round((b - a) / h))) if b > a else 0
        ax = np.round(np.linspace(a, b, k + 1), 12)
        lo.append(float(a))
        hi.append(float(b))
        shape.append(k + 1)
        axes.append(ax)
    return tuple(lo), tuple(hi), tuple(shape), axes


def node_function(nodes, values, space=None, name="", infimum=None):
    P = np.asarray(nodes, float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    space = space or MetricSpace.euclidean(P.shape[1])
    return NodeFunction(space, P, values, name, infimum)


def indicator_function(C: FiniteSet, name=""):
    """iota_C as a node function (0 on the points of C)."""
    return NodeFunction(C.space, C.points, np.zeros(len(C)), name or f"iota({C.label})")


def gridded_indicator(mask_fn, box, step, space=None, name=""):
    """Gridded indicator: 0 where ``mask_fn`` is true, +inf elsewhere."""
    return GriddedFunction.from_callable(
        lambda X: np.where(mask_fn(X), 0.0, INF), box, step, space, name)


def fsum(f, g, name=None):
    """Pointwise sum with inf + (-inf) = inf; f and g must share nodes."""
    _same_nodes(f, g)
    v = ext_add_arr(f.values, g.values)
    ff, gf = f.func, g.func
    func = None if ff is None or gf is None else (lambda X: ext_add_arr(ff(X), gf(X)))
    return f.with_values(v, name or f"{f.name}+{g.name}", func)


def shift(f, c, name=None):
    ff = f.func
    func = None if ff is None else (lambda X: np.asarray(ff(X), float) + c)
    return f.with_values(f.values + c, name or f"{f.name}+{c:g}", func)


def _same_nodes(f, g):
    if f.space != g.space or f.nodes.shape != g.nodes.shape or not np.array_equal(f.nodes, g.nodes):
        raise InputError("functions must share their nodes")


# ---------------------------------------------------------------------------
# Hoelder moduli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderModulus:
    exponent: float = 1.0
    kappa: object = 1.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise InputError("Hoelder exponent must be positive")

    def __call__(self, rho):
        k = self.kappa
        return float(k(rho)) if callable(k) else float(k)


def _pair_index(n, budget, seed=0):
    if n * (n - 1) // 2 <= budget:
        I, J = np.triu_indices(n, 1)
        return I, J
    rng = np.random.default_rng(seed)
    I = rng.integers(0, n, size=budget)
    J = rng.integers(0, n, size=budget)
    keep = I != J
    return I[keep], J[keep]


def validate_holder(space, points, values, modulus, tol=TAU, budget=200_000):
    """Worst violation of |f(x) - f(y)| <= kappa(r) d(x, y)^alpha on point pairs.

    r is the larger norm of the pair.  Values must be finite.
    """
    P = np.asarray(points, float)
    v = np.asarray(values, float)
    if len(v) < 2:
        return 0.0
    if not np.isfinite(v).all():
        raise PreconditionError("Hoelder validation needs finite values")
    I, J = _pair_index(len(v), budget)
    nrm = space.norms(P)
    worst = -INF
    for s in range(0, len(I), 500_000):
        i, j = I[s:s + 500_000], J[s:s + 500_000]
        d = space._reduce(P[i] - P[j])
        r = np.maximum(nrm[i], nrm[j])
        k = np.array([modulus(x) for x in r]) if callable(modulus.kappa) else modulus(0)
        gap = np.abs(v[i] - v[j]) - k * d ** modulus.exponent
        worst = max(worst, float(gap.max()))
    return worst


def validate_midpoint_convexity(f, tol=1e-9, budget=200_000, seed=0):
    """Return a node where midpoint convexity fails, or None.

    Pairs of nodes whose midpoint is itself a node are tested.
    """
    if isinstance(f, GriddedFunction):
        idx = np.stack(np.unravel_index(np.arange(len(f)), f.shape), axis=1)
        I, J = _pair_index(len(f), budget, seed)
        even = np.all((idx[I] + idx[J]) % 2 == 0, axis=1)
        I, J = I[even], J[even]
        M = np.ravel_multi_index(((idx[I] + idx[J]) // 2).T, f.shape)
    else:
        tree = cKDTree(f.nodes)
        I, J = _pair_index(len(f), budget, seed)
        mid = (f.nodes[I] + f.nodes[J]) / 2
        d, M = tree.query(mid)
        ok = d < 1e-9
        I, J, M = I[ok], J[ok], M[ok]
    v = f.values
    rhs = ext_add_arr(v[I], v[J]) / 2
    bad = v[M] > rhs + tol
    if bad.any():
        return f.nodes[M[np.argmax(bad)]].tolist()
    return None


# ---------------------------------------------------------------------------
# level sets, argmins
# ---------------------------------------------------------------------------

@dataclass
class SolutionSummary:
    infimum: float
    argmin_eps: dict = field(default_factory=dict)
    level_sets: dict = field(default_factory=dict)


def infimum(f):
    if f.infimum is not None:
        return float(f.infimum)
    return float(f.values.min()) if len(f) else INF


# value comparisons allow the same relative rounding slack as ball membership
VALUE_RTOL = 1e-12


def _at_most(values, bound):
    return values <= bound + VALUE_RTOL * max(1.0, abs(bound))


def level_set(f, delta, label=None):
    keep = _at_most(f.values, delta)
    return FiniteSet(f.space, f.nodes[keep], label or f"lev_{delta:g} {f.name}")


def argmin_set(f, eps=0.0, label=None):
    m = infimum(f)
    if m == INF:
        keep = np.zeros(len(f), bool)
    elif m == -INF:
        keep = f.values == -INF
    else:
        keep = f.finite & _at_most(f.values, m + eps)
    return FiniteSet(f.space, f.nodes[keep], label or f"{eps:g}-argmin {f.name}")


def solution_summary(f, eps_list=(0.0,), delta_list=()):
    return SolutionSummary(infimum(f),
                           {float(e): argmin_set(f, e) for e in eps_list},
                           {float(d): level_set(f, d) for d in delta_list})


# ---------------------------------------------------------------------------
# epigraph distances
# ---------------------------------------------------------------------------

def _sources(f, rho):
    """Nodes of lev_rho f inside B(rho) and their clipped values max(f, -rho)."""
    keep = (f.values <= rho) & f.space.in_ball(f.nodes, rho)
    return np.flatnonzero(keep), np.maximum(f.values[keep], -rho)


def _excess_brute(space, S, u, T, gv):
    out = np.empty(len(S))
    step = max(1, _BRUTE_CHUNK // max(1, len(T) * space.dim))
    for s in range(0, len(S), step):
        D = space.pair_dist(S[s:s + step], T)
        E = np.maximum(D, gv[None, :] - u[s:s + step, None])
        out[s:s + step] = E.min(axis=1)
    return out


def _excess_filter(f, g, src, u):
    """Same quantity as _excess_brute for a shared sup-norm grid.

    For each candidate radius r the minimum of g over the sup-ball of radius r
    around every node is one box filter; the least admissible eta for a
    source node is min over r of max(r, min_{B(x, r)} g - u(x)).
    """
    G = g.values.reshape(g.shape)
    h = np.asarray(g.spacing)
    cands = np.unique(np.concatenate(
        [np.arange(n) * hi for n, hi in zip(g.shape, h) if n > 1] or [np.zeros(1)]))
    best = np.full(len(src), INF)
    for r in cands:
        if r >= best.max():
            break
        size = [2 * int(math.floor(r / hi + 1e-9)) + 1 if hi > 0 else 1 for hi in h]
        M = minimum_filter(G, size=size, mode="constant", cval=INF).ravel()
        with np.errstate(invalid="ignore"):
            val = np.maximum(r, M[src] - u)
        best = np.minimum(best, val)
    return best


def kenmochi_excess(f, g, rho):
    """exs(epi f cap B(rho); epi g) from the one-sided Kenmochi conditions.

    Equals the least eta >= 0 with inf_{B(x, eta)} g <= max(f(x), -rho) + eta
    for every x in lev_rho f cap B(rho).
    """
    if f.space != g.space:
        raise InputError("functions live in different spaces")
    src, u = _sources(f, rho)
    if len(src) == 0:
        return 0.0
    tgt = g.finite
    if not tgt.any():
        return INF
    if isinstance(f, GriddedFunction) and f.same_grid(g) and f.space.kind == "linf":
        e = _excess_filter(f, g, src, u)
    else:
        e = _excess_brute(f.space, f.nodes[src], u, g.nodes[tgt], g.values[tgt])
    return max(0.0, float(e.max()))


def kenmochi_dl(f, g, rho):
    """dl_rho(epi f, epi g) for node functions; +inf (with a warning) if an epigraph is empty."""
    if not f.finite.any() or not g.finite.any():
        warnings.warn("empty epigraph on the grid", RuntimeWarning, stacklevel=2)
    return max(kenmochi_excess(f, g, rho), kenmochi_excess(g, f, rho))


def kenmochi_feasible(f, g, rho, eta, tol=1e-12):
    """Literal test of both Kenmochi condition families at a given eta."""
    for a, b in ((f, g), (g, f)):
        src, u = _sources(a, rho)
        if len(src) == 0:
            continue
        D = a.space.pair_dist(a.nodes[src], b.nodes)
        ok = (D <= eta + tol) & (b.values[None, :] <= u[:, None] + eta + tol)
        if not ok.any(axis=1).all():
            return False
    return True


def epi_cloud(f, rho, vstep, top=None):
    """Point cloud of epi f for the oracle.

    Each node with f(x) <= top contributes the clipped base point
    (x, max(f(x), -rho)) and the vertical lattice above it up to ``top``
    (default rho).  Lies inside epi f and covers epi f cap B(rho) within vstep.
    """
    if vstep <= 0:
        raise InputError("vstep must be positive")
    top = rho if top is None else top
    space = MetricSpace.product(f.space, MetricSpace.euclidean(1))
    keep = f.values <= top
    X = f.nodes[keep]
    base = np.maximum(f.values[keep], -rho)
    if not len(X):
        out = FiniteSet(space, np.zeros((0, space.dim)), f"epi {f.name}")
        out.meta["empty_epigraph"] = True
        return out
    k0 = math.floor(float(base.min()) / vstep) + 1
    k1 = math.ceil(top / vstep) - 1
    grid = np.round(np.arange(k0, k1 + 1) * vstep, 12)
    # per node: the base, the grid strictly between base and top, then top
    inner = (grid[None, :] > base[:, None]) & (grid[None, :] < top)
    cap = base < top
    table = np.full((len(X), len(grid) + 2), np.nan)
    table[:, 0] = base
    table[:, 1:-1] = np.where(inner, grid[None, :], np.nan)
    table[:, -1] = np.where(cap, top, np.nan)
    mask = ~np.isnan(table)
    levels = table[mask]
    owner = np.nonzero(mask)[0]
    P = np.concatenate([X[owner], levels[:, None]], axis=1)
    return FiniteSet(space, P, f"epi {f.name}")


def _cloud_excess(A, B, bound=INF):
    """max over A of the distance to B; +inf once some distance reaches ``bound``."""
    if A.empty:
        return 0.0
    if B.empty:
        return INF
    kind = A.space.kind
    if kind is None:
        d = nearest_brute(A.space, A.points, B.points)
    else:
        d, _ = cKDTree(B.points).query(A.points, p=2 if kind == "l2" else np.inf,
                                       distance_upper_bound=bound)
    return float(d.max()) if d.max() < bound else INF


def _column_excess(A, B, bound):
    """_cloud_excess for planar sup-norm clouds, scanning the columns of B outward.

    Columns are the distinct first coordinates of B.  A column at horizontal
    distance d cannot bring a point closer than d, and a point whose current
    distance is already below the settled maximum cannot change the answer.
    """
    bx, lev = B.points[:, 0], B.points[:, 1]
    if np.all(bx[1:] >= bx[:-1]):
        # epi_cloud output is already column-major
        start = np.concatenate(([True], bx[1:] != bx[:-1]))
        cx, col = bx[start], np.cumsum(start) - 1
    else:
        cx, col = np.unique(bx, return_inverse=True)
    span = float(np.abs(lev).max() + np.abs(A.points[:, 1]).max()) + 1.0
    key = col * 4 * span + lev
    if np.any(key[1:] < key[:-1]):
        order = np.argsort(key, kind="stable")
        key, lev, col = key[order], lev[order], col[order]
    x, a = A.points[:, 0], A.points[:, 1]
    pos = np.searchsorted(cx, x)
    best = np.full(len(A), INF)

    first = np.searchsorted(col, np.arange(len(cx)))
    last = np.searchsorted(col, np.arange(len(cx)), side="right") - 1

    def dist(c, idx):
        # distance from points idx to column c, inf where c is out of range
        ok = (c >= 0) & (c < len(cx))
        c = np.where(ok, c, 0)
        k = np.searchsorted(key, c * 4 * span + a[idx])
        lo, hi = first[c], last[c]
        dv = np.minimum(np.abs(lev[np.clip(k - 1, lo, hi)] - a[idx]),
                        np.abs(lev[np.clip(k, lo, hi)] - a[idx]))
        return np.where(ok, np.maximum(np.abs(x[idx] - cx[c]), dv), INF)

    def gap(c, idx):
        ok = (c >= 0) & (c < len(cx))
        return np.where(ok, np.abs(x[idx] - cx[np.clip(c, 0, len(cx) - 1)]), INF)

    def scan(active, floor):
        k, width = 0, 1
        while len(active) and k <= len(cx):
            # offsets k .. k+width-1 on both sides, in one vectorized pass
            ks = np.arange(k, k + width)
            idx = np.repeat(active[:, None], width, axis=1)
            right = pos[active][:, None] + ks
            left = pos[active][:, None] - 1 - ks
            cand = np.minimum(dist(right, idx), dist(left, idx)).min(axis=1)
            best[active] = np.minimum(best[active], cand)
            k += width
            width = min(2 * width, 4)
            lo = np.minimum(gap(pos[active] + k, active), gap(pos[active] - 1 - k, active))
            done = best[active] <= lo
            if np.any(~done & (lo >= bound)):
                return INF
            if done.any():
                floor = max(floor, float(best[active[done]].max()))
            # only points that could still raise the maximum stay in play
            active = active[~done & (best[active] > floor)]
        return floor

    # the lowest point of every source column tends to be the farthest one
    order = np.lexsort((a, x))
    heads = order[np.concatenate(([True], x[order][1:] != x[order][:-1]))]
    floor = scan(heads, 0.0)
    if floor >= bound:
        return INF
    # a point inside the level range of a column at its own abscissa is
    # within half the widest level gap of that column
    widest = np.zeros(len(cx))
    inner = col[1:] == col[:-1]
    np.maximum.at(widest, col[1:][inner], np.diff(lev)[inner])
    at = np.clip(pos, 0, len(cx) - 1)
    own = (cx[at] == x) & (a >= lev[first[at]]) & (a <= lev[last[at]])
    cheap = np.where(own, widest[at] / 2, INF)
    floor = scan(np.flatnonzero(cheap > floor), floor)
    return floor if floor < bound else INF


def _ray_bound(src, g, count=24):
    """Upper bound on the excess of src over epi g via vertical rays at a few nodes of g."""
    idx = np.flatnonzero(g.finite)
    idx = np.unique(idx[np.linspace(0, len(idx) - 1, min(count, len(idx))).astype(int)])
    n = g.space.dim
    X, alpha = src.points[:, :n], src.points[:, n]
    horiz = g.space.pair_dist(g.nodes[idx], X)
    d = np.maximum(horiz, np.maximum(0.0, g.values[idx][:, None] - alpha[None, :]))
    return float(d.max(axis=1).min())


def epi_oracle_excess(f, g, rho, vstep):
    src = ball_intersect(epi_cloud(f, rho, vstep), rho)
    if src.empty:
        return 0.0
    if not g.finite.any():
        return INF
    planar = src.space.dim == 2 and src.space.kind == "linf"
    top = rho + _ray_bound(src, g) + vstep + 1e-9
    while True:
        # the answer is trusted only below top - rho; target points farther
        # than top from the centroid cannot come closer than that
        tgt = ball_intersect(epi_cloud(g, rho, vstep, top), top)
        if tgt.empty:
            val = INF
        elif planar:
            val = _column_excess(src, tgt, top - rho)
        else:
            val = _cloud_excess(src, tgt, top - rho)
        if val < top - rho:
            return val
        top = rho + 2 * (top - rho)


def epi_oracle_dl(f, g, rho, vstep):
    """Brute-force dl_rho between epigraph clouds (within vstep of the exact value)."""
    return max(epi_oracle_excess(f, g, rho, vstep), epi_oracle_excess(g, f, rho, vstep))


# ---------------------------------------------------------------------------
# solution and level-set estimates
# ---------------------------------------------------------------------------

def _slack(*fs):
    return max(f.mesh for f in fs)


def check_solution_estimates(f, g, eps, delta, rho, tol=TAU):
    """Infima and near-minimizers versus dl_rho(epi f, epi g)."""
    eta = kenmochi_dl(f, g, rho)
    inf_f, inf_g = infimum(f), infimum(g)
    lhs_inf = ext_absdiff(inf_f, inf_g)
    am_g = argmin_set(g, eps)
    lhs_am = excess(ball_intersect(am_g, rho), argmin_set(f, delta))
    lhs = max(lhs_inf, lhs_am)
    rep = BoundReport("solution-estimates", lhs, eta, tol=tol + _slack(f, g), details={
        "inf_f": inf_f, "inf_g": inf_g, "inf_gap": lhs_inf, "argmin_excess": lhs_am, "dl": eta})
    for name, m in (("inf f", inf_f), ("inf g", inf_g)):
        rep.add_condition(f"{name} in [-rho, rho - eps)", -rho <= m < rho - eps, m)
    for name, fn in (("f", f), ("g", g)):
        # on finitely many nodes the gamma-argmin for small gamma > 0 is the argmin
        near = argmin_set(fn, 0.0)
        rep.add_condition(f"small-gamma argmin of {name} meets B(rho)",
                          not ball_intersect(near, rho).empty)
    rep.add_condition("delta > eps + 2 dl", delta > eps + 2 * eta, eps + 2 * eta)
    return rep


def check_level_set_estimate(f, g, delta, eps, rho, tol=TAU):
    """exs(lev_delta g cap B(rho); lev_eps f) <= exs(epi g cap B(rho); epi f) <= dl."""
    e_gf = kenmochi_excess(g, f, rho)
    eta = kenmochi_dl(f, g, rho)
    lhs = excess(ball_intersect(level_set(g, delta), rho), level_set(f, eps))
    rep = BoundReport("level-set-estimate", lhs, e_gf, tol=tol + _slack(f, g),
                      details={"epi_excess": e_gf, "dl": eta})
    rep.add_condition("delta in [-rho, rho]", -rho <= delta <= rho, delta)
    rep.add_condition("eps > delta + exs(epi g; epi f)", eps > delta + e_gf, delta + e_gf)
    return rep


# ---------------------------------------------------------------------------
# sup-norm and Hoelder-sum estimates
# ---------------------------------------------------------------------------

def a_rho_mask(f, g, rho, reading="union-first"):
    """Nodes of (lev_rho f union lev_rho g) cap B(rho).

    ``reading='intersect-first'`` gives lev_rho f union (lev_rho g cap B(rho)).
    """
    _same_nodes(f, g)
    lf, lg = f.values <= rho, g.values <= rho
    ball = f.space.in_ball(f.nodes, rho)
    if reading == "union-first":
        return (lf | lg) & ball
    if reading == "intersect-first":
        return lf | (lg & ball)
    raise InputError(f"unknown reading {reading!r}")


def _sup_absdiff_arr(a, b):
    if len(a) == 0:
        return 0.0
    inf_mask = np.isinf(a) | np.isinf(b)
    if inf_mask.any():
        return INF
    return float(np.abs(a - b).max())


def check_supnorm_bound(f, g, rho, C=None, modulus=None, rho_hat=None, tol=TAU,
                        reading="union-first"):
    """dl_rho(epi f, epi g) <= sup over A_rho of |f - g|, and the net form when C is given."""
    eta = kenmochi_dl(f, g, rho)
    A = a_rho_mask(f, g, rho, reading)
    sup_a = _sup_absdiff_arr(f.values[A], g.values[A])
    rhs = sup_a
    details = {"dl": eta, "sup_A": sup_a, "A_size": int(A.sum()), "second_form": False}
    if C is not None and modulus is not None:
        if C.empty:
            raise InputError("C must be nonempty")
        A_set = FiniteSet(f.space, f.nodes[A])
        e = excess(A_set, C)
        need = rho + e
        rh = rho_hat if rho_hat is not None else auto_radius(need)
        for fn in (f, g):
            pts = np.concatenate([fn.nodes, C.points])
            vals = np.concatenate([fn.values, fn(C.points)])
            inball = fn.space.in_ball(pts, rh) & np.isfinite(vals)
            worst = validate_holder(fn.space, pts[inball], vals[inball], modulus, tol)
            if worst > 10 * tol:
                raise PreconditionError(f"modulus violated by {fn.name!r} ({worst:.3g})")
        sup_c = _sup_absdiff_arr(f(C.points), g(C.points))
        rhs2 = max(e, modulus(rh) * e ** modulus.exponent + sup_c)
        details.update(exs_A_C=e, sup_C=sup_c, rho_hat=rh, rhs_net=rhs2, rhs_sup=sup_a)
        if rh > need:
            details["second_form"] = True
            rhs = min(rhs, rhs2)
    return BoundReport("supnorm", eta, rhs, tol=tol, details=details)


def check_holder_sum(f1, f2, g1, g2, modulus, rho, rho_bar=None, rho_hat=None, tol=TAU):
    """dl_rho(epi(f1+f2), epi(g1+g2)) <= sup_A |f1-g1| + eta + kappa eta^alpha."""
    for fn in (f1, g1):
        ball = fn.space.in_ball(fn.nodes, rho_hat if rho_hat is not None else INF)
        worst = validate_holder(fn.space, fn.nodes[ball], fn.values[ball], modulus, tol)
        if worst > 10 * tol:
            raise PreconditionError(f"modulus violated by {fn.name!r} ({worst:.3g})")
    F, G = fsum(f1, f2), fsum(g1, g2)
    ball = f1.space.in_ball(f1.nodes, rho)
    sup1 = max(float(np.abs(f1.values[ball]).max()) if ball.any() else 0.0,
               float(np.abs(g1.values[ball]).max()) if ball.any() else 0.0)
    need_bar = rho + sup1
    rb = rho_bar if rho_bar is not None else need_bar
    eta = kenmochi_dl(f2, g2, rb)
    need_hat = rho + eta
    rh = rho_hat if rho_hat is not None else auto_radius(need_hat)
    A = a_rho_mask(F, G, rho)
    sup_a = _sup_absdiff_arr(f1.values[A], g1.values[A])
    lhs = kenmochi_dl(F, G, rho)
    rhs = sup_a + eta + modulus(rh) * eta ** modulus.exponent if eta < INF else INF
    rep = BoundReport("holder-sum", lhs, rhs, tol=tol, details={
        "eta": eta, "sup_A": sup_a, "rho_bar": rb, "rho_hat": rh})
    rep.add_condition("A_rho nonempty", bool(A.any()))
    rep.add_condition("epigraphs of the sums nonempty", bool(F.finite.any() and G.finite.any()))
    rep.add_condition("rho_bar >= rho + sup_B(rho) |f1|, |g1|", rb >= need_bar, need_bar)
    rep.add_condition("rho_hat > rho + eta", rh > need_hat, need_hat)
    return rep


# ---------------------------------------------------------------------------
# compositions
# ---------------------------------------------------------------------------

def compose_inner(f, Finv, name=None):
    """f o F as a node function on X, built from the inverse mapping F^{-1}.

    Every x in F^{-1}(y) for a node y with f(y) < inf carries the value f(y);
    this is exact for f that is +inf off its nodes.
    """
    nodes, vals = [], []
    for y, v in zip(f.nodes, f.values):
        if v == INF:
            continue
        X = Finv(y)
        if X.empty:
            continue
        nodes.append(X.points)
        vals.append(np.full(len(X), v))
    dim = Finv.codomain.dim
    if not nodes:
        return NodeFunction(Finv.codomain, np.zeros((0, dim)), np.zeros(0), name or "f o F")
    P = np.concatenate(nodes)
    V = np.concatenate(vals)
    return _min_merge(Finv.codomain, P, V, name or f"{f.name} o F")


def _min_merge(space, P, V, name):
    """Merge duplicate nodes keeping the smallest value."""
    key = np.round(P, 12)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    out = np.full(len(uniq), INF)
    np.minimum.at(out, inv, V)
    return NodeFunction(space, uniq, out, name)


def linear_inverse_map(A, space=None, name="A^-1"):
    """y -> {A^{-1} y}, Lipschitz with modulus ||A^{-1}|| relative to inf."""
    from .set_calculus import LipschitzSetMap, operator_norm
    A = np.atleast_2d(np.asarray(A, float))
    Ainv = np.linalg.inv(A)
    space = space or MetricSpace.euclidean(A.shape[0])
    kind = space.kind or "l2"
    return LipschitzSetMap(lambda y: (Ainv @ np.atleast_1d(y))[None, :], space,
                           operator_norm(Ainv, kind), INF, name)


def check_comp_inner(f, g, Finv, Ginv, radii: RadiusBundle, probes=None, tol=TAU,
                     budget=5000):
    """Compositions with a Lipschitz inverse of the inner mapping."""
    from .set_calculus import validate_set_map_modulus
    rho = radii.rho
    phi, psi = compose_inner(f, Finv), compose_inner(g, Ginv)
    lhs = kenmochi_dl(phi, psi, rho)

    def dist0(U, y):
        S = U(y)
        return float(S.norms().min()) if not S.empty else INF

    t1 = min((max(max(v, 0.0), dist0(Finv, y)) for y, v in zip(f.nodes, f.values) if v < INF),
             default=INF)
    t2 = min((max(max(v, 0.0), dist0(Finv, y), dist0(Ginv, y))
              for y, v in zip(g.nodes, g.values) if v < INF), default=INF)
    need_star = 2 * rho + max(t1, t2)
    rho_star = radii.rho_star if radii.rho_star is not None else auto_radius(need_star)

    # sup of |F(x)| over x in B(rho*), restricted to the points that matter
    def image_radius(fn, U):
        best = 0.0
        for y, v in zip(fn.nodes, fn.values):
            if v > rho_star:
                continue
            X = U(y)
            if not X.empty and (X.norms() <= rho_star * (1 + 1e-12)).any():
                best = max(best, float(fn.space.norms(y[None, :])[0]))
        return best

    need_bar = max(rho_star, image_radius(f, Finv), image_radius(g, Ginv))
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    eta = kenmochi_dl(f, g, rho_bar)
    need_hat = rho_bar + eta
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    kappa = max(Finv.kappa(rho_hat), Ginv.kappa(rho_hat))

    Y = FiniteSet(f.space, np.unique(np.concatenate([f.nodes, g.nodes]), axis=0))
    for U in (Finv, Ginv):
        pool = Y.with_points(Y.points[Y.space.in_ball(Y.points, rho_hat)])
        worst = validate_set_map_modulus(U, pool, rho_star, tol, budget)
        if worst > 10 * tol:
            raise PreconditionError(f"declared modulus of {U.name!r} violated by {worst:.3g}")
    if probes is None:
        probes = Y.with_points(Y.points[Y.space.in_ball(Y.points, rho_bar)])
    sup_term = 0.0
    for y in probes.points:
        A, B = Finv(y), Ginv(y)
        if A.empty or B.empty:
            raise PreconditionError("inverse mapping is empty at a probe point")
        sup_term = max(sup_term, trunc_hausdorff(A, B, rho_star))
    rhs = sup_term + max(1.0, kappa) * eta if eta < INF else INF
    rep = BoundReport("comp-inner", lhs, rhs, tol=tol, details={
        "rho_star": rho_star, "rho_bar": rho_bar, "rho_hat": rho_hat, "kappa": kappa,
        "sup_term": sup_term, "eta": eta, "probes": len(probes)})
    rep.add_condition("inverse mappings nonempty-valued", True)
    rep.add_condition("rho* > 2rho + max(...)", rho_star > need_star, need_star)
    rep.add_condition("rho_bar > max(rho*, sup |F|, sup |G|)", rho_bar > need_bar, need_bar)
    rep.add_condition("rho_hat > rho_bar + eta", rho_hat > need_hat, need_hat)
    return rep


@dataclass(frozen=True, eq=False)
class PointMap:
    """A single-valued mapping given by its values at finitely many nodes."""
    domain: MetricSpace
    codomain: MetricSpace
    nodes: np.ndarray
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        P = np.asarray(self.nodes, float).reshape(-1, self.domain.dim)
        V = np.asarray(self.values, float).reshape(-1, self.codomain.dim)
        if len(P) != len(V):
            raise InputError("one image per node required")
        object.__setattr__(self, "nodes", P)
        object.__setattr__(self, "values", V)

    @classmethod
    def from_callable(cls, func, nodes, domain=None, codomain=None, name=""):
        P = np.asarray(nodes, float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        domain = domain or MetricSpace.euclidean(P.shape[1])
        V = np.asarray(_call(func, P), float)
        V = V.reshape(len(P), -1)
        codomain = codomain or MetricSpace.euclidean(V.shape[1])
        return cls(domain, codomain, P, V, name)

    def graph(self) -> FiniteSet:
        space = MetricSpace.product(self.domain, self.codomain)
        return FiniteSet(space, np.concatenate([self.nodes, self.values], axis=1), f"gph {self.name}")


def check_comp_outer(f, Fm: PointMap, Gm: PointMap, modulus, radii: RadiusBundle, tol=TAU):
    """Compositions with a Lipschitz outer function f (callable on Y)."""
    if f.func is None:
        raise InputError("the outer function must be evaluable off its nodes")
    if not np.array_equal(Fm.nodes, Gm.nodes):
        raise InputError("F and G must share their nodes")
    rho = radii.rho
    X = Fm.domain
    phi = NodeFunction(X, Fm.nodes, f(Fm.values), "f o F")
    psi = NodeFunction(X, Gm.nodes, f(Gm.values), "f o G")
    lhs = kenmochi_dl(phi, psi, rho)
    inb = X.in_ball(Fm.nodes, rho)

    def sup_image(M, vals):
        keep = inb & (vals <= rho)
        return float(M.codomain.norms(M.values[keep]).max()) if keep.any() else 0.0

    need_bar = max(rho, sup_image(Fm, phi.values), sup_image(Gm, psi.values))
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    eta = trunc_hausdorff(Fm.graph(), Gm.graph(), rho_bar)
    need_hat = rho_bar + eta
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    pts = np.unique(np.concatenate([Fm.values, Gm.values, f.nodes]), axis=0)
    pts = pts[Fm.codomain.in_ball(pts, rho_hat)]
    vals = f(pts)
    worst = validate_holder(Fm.codomain, pts, vals, HolderModulus(1.0, modulus.kappa), tol)
    if worst > 10 * tol:
        raise PreconditionError(f"outer function violates its modulus by {worst:.3g}")
    kappa = modulus(rho_hat)
    rhs = max(1.0, kappa) * eta
    rep = BoundReport("comp-outer", lhs, rhs, tol=tol, details={
        "rho_bar": rho_bar, "rho_hat": rho_hat, "kappa": kappa, "dl_graphs": eta})
    rep.add_condition("rho_bar > max(rho, image radii)", rho_bar > need_bar, need_bar)
    rep.add_condition("rho_hat > rho_bar + dl(gph F, gph G)", rho_hat > need_hat, need_hat)
    return rep


# ---------------------------------------------------------------------------
# inf-projections and epi-compositions
# ---------------------------------------------------------------------------

def inf_projection(fs, name="inf-projection"):
    fs = list(fs)
    if not fs:
        raise InputError("empty family")
    for f in fs[1:]:
        _same_nodes(fs[0], f)
    v = np.min(np.stack([f.values for f in fs]), axis=0)
    return fs[0].with_values(v, name)


def check_inf_projection(fs, gs, rho, tol=TAU):
    fs, gs = list(fs), list(gs)
    if len(fs) != len(gs) or not fs:
        raise InputError("families must be nonempty and of equal size")
    lhs = kenmochi_dl(inf_projection(fs), inf_projection(gs), rho)
    rhs = max(kenmochi_dl(f, g, rho) for f, g in zip(fs, gs))
    return BoundReport("inf-projection", lhs, rhs, tol=tol)


def epi_composition(f, Fm: PointMap, y_box, y_step, name=None):
    """(Ff)(y) = min of f over the nodes whose image rounds to y on the y-grid."""
    if not np.array_equal(Fm.nodes, f.nodes):
        raise InputError("F must be given on the nodes of f")
    lo, hi, shape, axes = _grid_axes(y_box, y_step)
    out = np.full(int(np.prod(shape)), INF)
    h = np.array([(b - a) / (n - 1) if n > 1 else 1.0 for a, b, n in zip(lo, hi, shape)])
    k = np.rint((Fm.values - np.asarray(lo)) / h).astype(int)
    ok = np.all((k >= 0) & (k < np.asarray(shape)), axis=1)
    idx = np.ravel_multi_index(k[ok].T, shape)
    np.minimum.at(out, idx, f.values[ok])
    return GriddedFunction.from_values(out, np.stack([lo, hi], axis=1), h,
                                       Fm.codomain, name or f"{Fm.name}{f.name}")


def epi_composition_exact(f, Fm: PointMap, name=None):
    """Ff as a node function on the exact image points F(x_j)."""
    if not np.array_equal(Fm.nodes, f.nodes):
        raise InputError("F must be given on the nodes of f")
    keep = f.finite
    return _min_merge(Fm.codomain, Fm.values[keep], f.values[keep], name or "Ff")


def check_epi_composition(f, g, Fm: PointMap, Gm: PointMap, modulus, radii: RadiusBundle,
                          tol=TAU, budget=200_000):
    """Epi-compositions Ff and Gg versus the images and the epigraph distance."""
    rho = radii.rho
    Ff, Gg = epi_composition_exact(f, Fm), epi_composition_exact(g, Gm)
    lhs = kenmochi_dl(Ff, Gg, rho)
    Y = Fm.codomain
    nF, nG = Y.norms(Fm.values), Y.norms(Gm.values)
    fv, gv = f.values, g.values
    t1 = float(np.min(np.where(fv < INF, np.maximum(nF, np.maximum(fv, 0)), INF)))
    t2 = float(np.min(np.where(gv < INF, np.maximum(np.maximum(nF, nG), np.maximum(gv, 0)), INF)))
    need_star = 2 * rho + max(t1, t2)
    rho_star = radii.rho_star if radii.rho_star is not None else auto_radius(need_star)
    xn = f.space.norms(f.nodes)
    need_bar = rho_star
    for vals, im in ((fv, nF), (fv, nG), (gv, nF), (gv, nG)):
        keep = (vals <= rho_star) & (im <= rho_star * (1 + 1e-12))
        if keep.any():
            need_bar = max(need_bar, float(xn[keep].max()))
    rho_bar = radii.rho_bar if radii.rho_bar is not None else auto_radius(need_bar)
    eta = kenmochi_dl(f, g, rho_bar)
    need_hat = rho_bar + eta
    rho_hat = radii.rho_hat if radii.rho_hat is not None else auto_radius(need_hat)
    for M in (Fm, Gm):
        # F Lipschitz relative to inf: |F(x) - F(x')| <= kappa(r) d(x, x')
        I, J = _pair_index(len(M.nodes), budget)
        d = f.space._reduce(M.nodes[I] - M.nodes[J])
        dy = Y._reduce(M.values[I] - M.values[J])
        r = np.maximum(xn[I], xn[J])
        k = np.array([modulus(x) for x in r]) if callable(modulus.kappa) else modulus(0)
        worst = float((dy - k * d).max()) if len(I) else 0.0
        if worst > 10 * tol:
            raise PreconditionError(f"mapping {M.name!r} violates its modulus by {worst:.3g}")
    inb = f.space.in_ball(f.nodes, rho_bar)
    sup_term = float(Y._reduce(Fm.values[inb] - Gm.values[inb]).max()) if inb.any() else 0.0
    kappa = modulus(rho_hat)
    rhs = sup_term + max(1.0, kappa) * eta if eta < INF else INF
    rep = BoundReport("epi-composition", lhs, rhs, tol=tol, details={
        "rho_star": rho_star, "rho_bar": rho_bar, "rho_hat": rho_hat, "kappa": kappa,
        "sup_term": sup_term, "eta": eta})
    rep.add_condition("rho* > 2rho + max(...)", rho_star > need_star, need_star)
    rep.add_condition("rho_bar > rho* and preimage radius", rho_bar > need_bar, need_bar)
    rep.add_condition("rho_hat > rho_bar + eta", rho_hat > need_hat, need_hat)
    return rep
