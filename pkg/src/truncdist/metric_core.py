"""Metric spaces, finite point clouds and exact truncated distances.

Everything here works on finite sets, so every inf/sup is attained and the
distances are exact up to floating point.  Large clouds go through a k-d tree
(scipy) when the metric is l2 or sup-norm; other product metrics use chunked
brute force, which also serves as the reference implementation in tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError

INF = math.inf

# relative slack used when deciding ball membership, so that grid nodes
# such as 0.30000000000000004 count as lying in the ball of radius 0.3
BALL_RTOL = 1e-12


# ---------------------------------------------------------------------------
# extended reals with the minimization convention inf - inf = inf
# ---------------------------------------------------------------------------

def ext(value) -> float:
    v = float(value)
    if math.isnan(v):
        raise InputError("NaN is not an extended real")
    return v


def ext_add(a, b) -> float:
    a, b = ext(a), ext(b)
    if a == INF or b == INF:
        return INF
    return a + b


def ext_sub(a, b) -> float:
    return ext_add(a, -ext(b))


def ext_absdiff(a, b) -> float:
    """|a - b|; infinite operands give inf, including inf - inf."""
    return abs(ext_sub(a, b))


def ext_add_arr(a, b):
    """Elementwise ext_add on arrays."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    out = a + b
    out[np.isposinf(a) | np.isposinf(b)] = INF
    return out


def ext_mul(c, a) -> float:
    """Nonnegative scalar times extended real, with 0 * inf = 0."""
    c, a = ext(c), ext(a)
    if c == 0:
        return 0.0
    return c * a


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

_NORMS = ("l2", "linf", "product")


@dataclass(frozen=True)
class MetricSpace:
    """R^dim with a norm choice and a centroid.

    ``norm='product'`` composes ``factors`` with the max-metric; the factor
    coordinates are laid out consecutively.
    """
    dim: int
    norm: str = "l2"
    centroid: tuple = None
    factors: tuple = ()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dimension must be a positive integer, got {self.dim}")
        if self.norm not in _NORMS:
            raise InputError(f"unknown norm {self.norm!r}")
        if self.norm == "product":
            if not self.factors:
                raise InputError("product space needs factors")
            if sum(f.dim for f in self.factors) != self.dim:
                raise InputError("factor dimensions do not add up")
        if self.centroid is None:
            if self.norm == "product":
                ctr = tuple(c for f in self.factors for c in f.centroid)
            else:
                ctr = (0.0,) * self.dim
            object.__setattr__(self, "centroid", ctr)
        else:
            ctr = tuple(float(c) for c in self.centroid)
            if len(ctr) != self.dim:
                raise InputError("centroid has wrong dimension")
            object.__setattr__(self, "centroid", ctr)

    @classmethod
    def euclidean(cls, n: int = 1, centroid=None):
        return cls(n, "l2", centroid)

    @classmethod
    def sup(cls, n: int = 1, centroid=None):
        return cls(n, "linf", centroid)

    @classmethod
    def product(cls, *spaces):
        flat = []
        for s in spaces:
            if s.norm == "product":
                flat.extend(s.factors)
            else:
                flat.append(s)
        if len(flat) == 1:
            return flat[0]
        return cls(sum(s.dim for s in flat), "product", None, tuple(flat))

    @property
    def kind(self):
        """'l2' or 'linf' when a single p-norm describes the metric, else None."""
        if self.norm != "product":
            if self.dim == 1:
                return "linf"
            return self.norm
        if all(f.dim == 1 or f.norm == "linf" for f in self.factors):
            return "linf"
        return None

    def _ctr(self):
        return np.asarray(self.centroid, dtype=float)

    def pair_dist(self, A, B):
        """Distance matrix between rows of A (k x n) and rows of B (l x n)."""
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        diff = A[:, None, :] - B[None, :, :]
        return self._reduce(diff)

    def _reduce(self, diff):
        kind = self.kind
        if kind == "linf":
            return np.max(np.abs(diff), axis=-1)
        if kind == "l2":
            return np.sqrt(np.sum(diff * diff, axis=-1))
        out = None
        start = 0
        for f in self.factors:
            part = f._reduce(diff[..., start:start + f.dim])
            out = part if out is None else np.maximum(out, part)
            start += f.dim
        return out

    def dist(self, x, y) -> float:
        d = np.asarray(x, float) - np.asarray(y, float)
        return float(self._reduce(d[None, :])[0])

    def norms(self, P):
        """Distance of every row of P to the centroid."""
        P = np.atleast_2d(np.asarray(P, float))
        if P.shape[0] == 0:
            return np.zeros(0)
        return self._reduce(P - self._ctr())

    def in_ball(self, P, rho):
        r = float(rho)
        return self.norms(P) <= r + BALL_RTOL * max(1.0, r)


def as_points(points, dim=None):
    P = np.asarray(points, dtype=float)
    if P.ndim == 0:
        P = P.reshape(1, 1)
    elif P.ndim == 1:
        if dim is not None and dim > 1 and P.shape[0] == dim:
            P = P.reshape(1, dim)
        elif P.shape[0] == 0:
            P = P.reshape(0, dim or 1)
        else:
            P = P.reshape(-1, 1)
    if dim is not None and P.shape[1] != dim:
        raise InputError(f"points have dimension {P.shape[1]}, space has {dim}")
    if np.isnan(P).any():
        raise InputError("points contain NaN")
    return P


@dataclass(frozen=True, eq=False)
class FiniteSet:
    """A finite point cloud in a metric space."""
    space: MetricSpace
    points: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = as_points(self.points, self.space.dim)
        P = np.array(P, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    def __len__(self):
        return self.points.shape[0]

    @property
    def empty(self):
        return self.points.shape[0] == 0

    def norms(self):
        return self.space.norms(self.points)

    def with_points(self, P, label=None):
        return FiniteSet(self.space, P, self.label if label is None else label)

    def unique(self):
        if self.empty:
            return self
        return self.with_points(np.unique(self.points, axis=0))

    def __repr__(self):
        return f"FiniteSet({self.label or '?'}, n={len(self)}, dim={self.space.dim})"


def finite_set(points, space=None, label=""):
    """Convenience constructor; defaults to the Euclidean space of matching dimension."""
    P = np.asarray(points, dtype=float)
    if space is None:
        dim = 1 if P.ndim <= 1 else P.shape[1]
        space = MetricSpace.euclidean(dim)
    return FiniteSet(space, P, label)


@dataclass(frozen=True)
class RadiusBundle:
    rho: float
    rho_bar: float = None
    rho_hat: float = None
    rho_star: float = None

    def __post_init__(self):
        for name in ("rho", "rho_bar", "rho_hat", "rho_star"):
            v = getattr(self, name)
            if v is None:
                continue
            v = ext(v)
            if v < 0:
                raise InputError(f"{name} must be nonnegative")
            if name != "rho_star" and v == INF:
                raise InputError(f"{name} must be finite")
            object.__setattr__(self, name, v)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

_CHUNK = 2_000_000


def _check_same(A: FiniteSet, B: FiniteSet):
    if A.space != B.space:
        raise InputError("sets live in different spaces")


def nearest_brute(space: MetricSpace, P, Q):
    """Distance from each row of P to the cloud Q by exhaustive scan."""
    P = np.atleast_2d(P)
    if Q.shape[0] == 0:
        return np.full(P.shape[0], INF)
    out = np.empty(P.shape[0])
    step = max(1, _CHUNK // max(1, Q.shape[0] * Q.shape[1]))
    for s in range(0, P.shape[0], step):
        out[s:s + step] = space.pair_dist(P[s:s + step], Q).min(axis=1)
    return out


def nearest(space: MetricSpace, P, Q, tree=None):
    """Distance from each row of P to the cloud Q (k-d tree when possible)."""
    P = np.atleast_2d(np.asarray(P, float))
    if P.shape[0] == 0:
        return np.zeros(0)
    if Q.shape[0] == 0:
        return np.full(P.shape[0], INF)
    kind = space.kind
    if kind is None or P.shape[0] * Q.shape[0] <= 4096:
        return nearest_brute(space, P, Q)
    if tree is None:
        tree = cKDTree(Q)
    d, _ = tree.query(P, k=1, p=2 if kind == "l2" else np.inf)
    return d


def point_dist(x, C: FiniteSet) -> float:
    x = as_points(x, C.space.dim)
    if x.shape[0] != 1:
        raise InputError("point_dist expects a single point")
    return float(nearest(C.space, x, C.points)[0])


def excess(C: FiniteSet, D: FiniteSet) -> float:
    _check_same(C, D)
    if C.empty:
        return 0.0
    if D.empty:
        return INF
    return float(nearest(C.space, C.points, D.points).max())


def excess_brute(C: FiniteSet, D: FiniteSet) -> float:
    _check_same(C, D)
    if C.empty:
        return 0.0
    if D.empty:
        return INF
    return float(nearest_brute(C.space, C.points, D.points).max())


def ball_intersect(C: FiniteSet, rho) -> FiniteSet:
    rho = ext(rho)
    if rho < 0:
        raise InputError("radius must be nonnegative")
    if C.empty or rho == INF:
        return C
    mask = C.space.in_ball(C.points, rho)
    return FiniteSet(C.space, C.points[mask], C.label)


def trunc_excess(C: FiniteSet, D: FiniteSet, rho) -> float:
    """exs(C cap B(rho); D)."""
    return excess(ball_intersect(C, rho), D)


def trunc_hausdorff(C: FiniteSet, D: FiniteSet, rho) -> float:
    _check_same(C, D)
    rho = ext(rho)
    if rho < 0:
        raise InputError("radius must be nonnegative")
    return max(trunc_excess(C, D, rho), trunc_excess(D, C, rho))


def trunc_hausdorff_brute(C: FiniteSet, D: FiniteSet, rho) -> float:
    return max(excess_brute(ball_intersect(C, rho), D),
               excess_brute(ball_intersect(D, rho), C))


def dist_to_centroid(C: FiniteSet) -> float:
    """dist(x^ctr, C); +inf for the empty set."""
    if C.empty:
        return INF
    return float(C.norms().min())


# ---------------------------------------------------------------------------
# samplers for continuous pieces (intervals, segments, rays)
# ---------------------------------------------------------------------------

def lattice(a, b, step):
    """Sorted values {a, b} plus the multiples k*step strictly inside (a, b)."""
    a, b, step = float(a), float(b), float(step)
    if step <= 0:
        raise InputError("step must be positive")
    if b < a:
        raise InputError("empty interval")
    if b == a:
        return np.array([a])
    k0 = math.floor(a / step) + 1
    k1 = math.ceil(b / step) - 1
    inner = np.round(np.arange(k0, k1 + 1) * step, 12)
    inner = inner[(inner > a) & (inner < b)]
    return np.unique(np.concatenate(([a], inner, [b])))


def sample_interval(a, b, step, space=None, label=""):
    space = space or MetricSpace.euclidean(1)
    return FiniteSet(space, lattice(a, b, step).reshape(-1, 1), label)


def sample_segment(p, q, step):
    """Points on the segment [p, q], about ``step`` apart in the sup-norm."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    length = float(np.max(np.abs(q - p)))
    k = max(1, int(math.ceil(length / step - 1e-9)))
    t = np.linspace(0.0, 1.0, k + 1)[:, None]
    return p + t * (q - p)


def sample_ray(origin, direction, extent, step):
    """The ray origin + t*direction, t >= 0, truncated where |t*direction| reaches extent."""
    d = np.asarray(direction, float)
    nd = float(np.max(np.abs(d)))
    if nd == 0:
        raise InputError("ray direction must be nonzero")
    return sample_segment(origin, np.asarray(origin, float) + d * (extent / nd), step)


def union_points(sets, label=""):
    sets = list(sets)
    if not sets:
        raise InputError("empty family")
    space = sets[0].space
    for s in sets[1:]:
        _check_same(sets[0], s)
    P = np.concatenate([s.points for s in sets], axis=0) if sets else np.zeros((0, space.dim))
    return FiniteSet(space, P, label)
