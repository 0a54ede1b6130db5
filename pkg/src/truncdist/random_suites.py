"""Seeded random instances for the property suites.

Each ``suite_*`` generator yields BoundReports; the instances are built so
that the side conditions hold, so every report is expected to pass.
"""
from __future__ import annotations

import numpy as np

from . import set_calculus as sc
from .epigraph import GriddedFunction, epi_oracle_dl, kenmochi_dl
from .metric_core import FiniteSet, MetricSpace, RadiusBundle, trunc_hausdorff
from .setvalued import (NearSolutionQuery, PLConvex, check_geneq_bound, dc_mapping_bound,
                        perturb_mapping, random_mapping)


def _space(rng, dims=(1, 2)):
    n = int(rng.choice(dims))
    return MetricSpace(n, "l2" if rng.random() < 0.5 else "linf")


def _cloud(rng, space, k=None, radius=2.0, center=None):
    k = k or int(rng.integers(1, 12))
    P = rng.uniform(-radius, radius, (k, space.dim))
    if center is not None:
        P = P + center
    return FiniteSet(space, P)


def _perturb(rng, C, size=0.3):
    P = C.points + rng.uniform(-size, size, C.points.shape)
    if rng.random() < 0.3 and len(P) > 1:
        P = P[rng.random(len(P)) < 0.7] if len(P) > 2 else P[:1]
    if rng.random() < 0.3:
        P = np.vstack([P, rng.uniform(-2, 2, (1, C.space.dim))])
    return FiniteSet(C.space, P)


def _inside(rng, space, rho, k=None):
    k = k or int(rng.integers(1, 10))
    P = rng.uniform(-1, 1, (k, space.dim))
    norms = space.norms(P)
    scale = rho * rng.uniform(0, 1, k) / np.maximum(norms, 1e-12)
    return FiniteSet(space, P * scale[:, None])


# ---------------------------------------------------------------------------
# set calculus
# ---------------------------------------------------------------------------

def _triangle(rng):
    sp = _space(rng)
    C1 = _cloud(rng, sp)
    return sc.check_triangle(C1, _perturb(rng, C1), _perturb(rng, C1), rng.uniform(0.2, 3))


def _product(rng):
    m = int(rng.integers(2, 4))
    Cs, Ds = [], []
    for _ in range(m):
        sp = _space(rng)
        C = _cloud(rng, sp, int(rng.integers(1, 6)))
        Cs.append(C)
        Ds.append(_perturb(rng, C))
    return sc.check_product(Cs, Ds, rng.uniform(0.5, 3))


def _indicator(rng):
    sp = _space(rng)
    C = _cloud(rng, sp)
    return sc.check_indicator(C, _perturb(rng, C), rng.uniform(0.2, 3), vstep=0.25)


def _union(rng):
    sp = _space(rng)
    m = int(rng.integers(1, 4))
    Cs = [_cloud(rng, sp) for _ in range(m)]
    return sc.check_union(Cs, [_perturb(rng, C) for C in Cs], rng.uniform(0.2, 3))


def _intersection(rng):
    sp = _space(rng)
    pool = np.round(rng.uniform(-2, 2, (20, sp.dim)) * 4) / 4
    m = int(rng.integers(2, 4))
    Cs, Ds = [], []
    for _ in range(m):
        pick = rng.random(len(pool)) < 0.6
        pick[0] = True
        C = FiniteSet(sp, pool[pick])
        Cs.append(C)
        Ds.append(_perturb(rng, C, 0.2))
    domain = FiniteSet(sp, rng.uniform(-2.5, 2.5, (30, sp.dim)))
    return sc.check_intersection_outer(Cs, Ds, domain)


def _hull(rng):
    sp = _space(rng)
    rho = rng.uniform(0.5, 3)
    C = _inside(rng, sp, rho)
    D = _inside(rng, sp, rho)
    if rng.random() < 0.5:
        P = np.clip(C.points + rng.uniform(-0.2, 0.2, C.points.shape), -rho, rho)
        D = _inside(rng, sp, rho, 1) if rng.random() < 0.2 else FiniteSet(sp, P * 0.5)
    return sc.check_hull(C, D, rho)


def _lipschitz(rng):
    n = int(rng.integers(1, 3))
    sp = MetricSpace(n, "linf")
    A = rng.uniform(-1, 1, (n, n))
    b = rng.uniform(-0.5, 0.5, (int(rng.integers(1, 3)), n))
    S = sc.affine_set_map(A, b, sp, name="S")
    T = sc.affine_set_map(A + rng.uniform(-0.1, 0.1, (n, n)),
                          b + rng.uniform(-0.1, 0.1, b.shape), sp, name="T")
    C = _cloud(rng, sp, radius=1.5)
    return sc.check_lipschitz_image(S, T, C, _perturb(rng, C, 0.2), RadiusBundle(rng.uniform(0.3, 2)))


def _sum(rng):
    sp = _space(rng)
    rho = rng.uniform(0.5, 3)
    m = int(rng.integers(2, 4))
    Cs = [_inside(rng, sp, rho, int(rng.integers(1, 6))) for _ in range(m)]
    Ds = [_inside(rng, sp, rho, int(rng.integers(1, 6))) for _ in range(m)]
    return sc.check_sum(Cs, Ds, rho)


def _scaling(rng):
    sp = _space(rng)
    C = _cloud(rng, sp)
    lam = rng.choice([-1, 1]) * rng.uniform(0.2, 3)
    mu = lam + rng.uniform(-0.5, 0.5) if rng.random() < 0.7 else lam
    if mu == 0:
        mu = lam
    return sc.check_scaling(C, _perturb(rng, C), lam, mu, rng.uniform(0.2, 3))


def _convex_quadratic(rng, box, h, space):
    a = rng.uniform(0.3, 3)
    c = rng.uniform(-1, 1, space.dim)
    b = rng.uniform(-0.5, 0.0)
    return GriddedFunction.from_callable(
        lambda X: a * np.sum((np.reshape(X, (len(X), -1)) - c) ** 2, axis=1) + b,
        box, h, space)


def _convex_level(rng):
    sp = MetricSpace.euclidean(1)
    box, h = [[-2.0, 2.0]], 0.05
    f = _convex_quadratic(rng, box, h, sp)
    g = _convex_quadratic(rng, box, h, sp) if rng.random() < 0.3 else \
        f.with_values(f.values + rng.uniform(0, 0.2))
    inf_f, inf_g = float(f.values.min()), float(g.values.min())
    alpha = inf_f + rng.uniform(0.1, 0.5)
    beta = inf_g + rng.uniform(0.1, 0.5)
    return sc.check_convex_level_sets(f, g, alpha, beta, rng.uniform(0.6, 2))


CALCULUS = {
    "triangle": _triangle,
    "product": _product,
    "indicator": _indicator,
    "union": _union,
    "intersection-outer": _intersection,
    "hull": _hull,
    "lipschitz-image": _lipschitz,
    "sum": _sum,
    "scaling": _scaling,
    "convex-level-sets": _convex_level,
}


def suite_calculus(check_id, count=1000, seed=0):
    gen = CALCULUS[check_id]
    rng = np.random.default_rng([seed, sorted(CALCULUS).index(check_id)])
    for _ in range(count):
        yield gen(rng)


# ---------------------------------------------------------------------------
# epigraph oracle
# ---------------------------------------------------------------------------

def random_piecewise_quadratic(rng, box=(-2.0, 2.0), h=0.01):
    """Up to three quadratic pieces, sometimes +inf outside a subinterval."""
    k = int(rng.integers(1, 4))
    cuts = np.sort(rng.uniform(box[0], box[1], k - 1))
    coef = rng.uniform(-1.5, 1.5, (k, 3))
    lo, hi = box
    if rng.random() < 0.3:
        lo, hi = np.sort(rng.uniform(box[0], box[1], 2))
        hi = max(hi, lo + 0.2)

    def func(x):
        piece = np.searchsorted(cuts, x)
        a, b, c = coef[piece, 0], coef[piece, 1], coef[piece, 2]
        v = a * x * x + b * x + c
        return np.where((x >= lo) & (x <= hi), v, np.inf)

    return GriddedFunction.from_callable(func, [list(box)], h)


def suite_oracle(count=500, seed=0, h=0.01, vstep=0.01):
    """(kenmochi, oracle, rho) triples on random piecewise-quadratic pairs."""
    rng = np.random.default_rng([seed, 101])
    for _ in range(count):
        f = random_piecewise_quadratic(rng, h=h)
        g = random_piecewise_quadratic(rng, h=h)
        rho = float(rng.uniform(0.3, 2.0))
        yield kenmochi_dl(f, g, rho), epi_oracle_dl(f, g, rho, vstep), rho


# ---------------------------------------------------------------------------
# set-valued suites
# ---------------------------------------------------------------------------

def suite_geneq(count=500, seed=0):
    rng = np.random.default_rng([seed, 202])
    for _ in range(count):
        S = random_mapping(rng)
        T = perturb_mapping(S, rng) if rng.random() < 0.8 else random_mapping(rng)
        rho = float(rng.uniform(0.5, 2.0))
        eps = float(rng.uniform(0, min(0.3, rho)))
        y = float(rng.uniform(-1, 1)) * (rho - eps)
        dl = trunc_hausdorff(S.graph(), T.graph(), rho)
        delta = eps + dl + (0.0 if rng.random() < 0.2 else float(rng.uniform(0, 0.3)))
        yield check_geneq_bound(S, T, NearSolutionQuery(y, eps, rho, delta))


def random_pl_convex(rng, step=0.05):
    k = int(rng.integers(0, 3))
    bps = np.sort(np.round(rng.uniform(-1, 1, k) / step) * step)
    bps = np.unique(bps)
    slopes = np.sort(rng.uniform(-1.5, 1.5, len(bps) + 1))
    return PLConvex(tuple(bps), tuple(slopes), float(rng.uniform(-0.5, 0.5)))


def suite_dc(count=200, seed=0, step=0.1):
    rng = np.random.default_rng([seed, 303])
    for _ in range(count):
        f1, f2 = random_pl_convex(rng), random_pl_convex(rng)
        g1 = f1 if rng.random() < 0.5 else random_pl_convex(rng)
        g2 = random_pl_convex(rng)
        yield dc_mapping_bound(f1, f2, g1, g2, float(rng.uniform(0.3, 1.0)), step=step)


