"""Planar convex polygons: hulls, exact point distances, ball clipping."""
from __future__ import annotations

import numpy as np

_EPS = 1e-12


def hull_2d(points):
    """Vertices of the convex hull in counter-clockwise order (monotone chain).

    Degenerate inputs give one vertex (a point) or two (a segment).
    """
    P = np.unique(np.asarray(points, float), axis=0)
    if len(P) <= 2:
        return P
    P = P[np.lexsort((P[:, 1], P[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in P:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in P[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _edges(V):
    if len(V) == 1:
        return []
    if len(V) == 2:
        return [(V[0], V[1])]
    return [(V[i], V[(i + 1) % len(V)]) for i in range(len(V))]


def dist_points_segment(P, a, b, kind):
    P = np.atleast_2d(P)
    d = b - a
    R = P - a
    if kind == "l2":
        dd = float(d @ d)
        t = np.zeros(len(P)) if dd == 0 else np.clip(R @ d / dd, 0.0, 1.0)
        Q = R - t[:, None] * d
        return np.sqrt(np.sum(Q * Q, axis=1))
    # sup-norm: max(|r0(t)|, |r1(t)|) is convex piecewise linear in t, so
    # its minimum over [0, 1] sits at an endpoint or a kink
    cands = [np.zeros(len(P)), np.ones(len(P))]
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(2):
            if d[i] != 0:
                cands.append(R[:, i] / d[i])
        if d[0] != d[1]:
            cands.append((R[:, 0] - R[:, 1]) / (d[0] - d[1]))
        if d[0] != -d[1]:
            cands.append((R[:, 0] + R[:, 1]) / (d[0] + d[1]))
    T = np.clip(np.nan_to_num(np.array(cands)), 0.0, 1.0)
    res = np.maximum(np.abs(R[None, :, 0] - T * d[0]), np.abs(R[None, :, 1] - T * d[1]))
    return res.min(axis=0)


def inside(P, V, tol=1e-10):
    """Boolean mask: which rows of P lie in the convex polygon V."""
    P = np.atleast_2d(P)
    if len(V) <= 2:
        return dist_points_polygon(P, V, "l2", test_inside=False) <= tol
    scale = max(1.0, float(np.abs(V).max()))
    ok = np.ones(len(P), bool)
    for a, b in _edges(V):
        cr = (b[0] - a[0]) * (P[:, 1] - a[1]) - (b[1] - a[1]) * (P[:, 0] - a[0])
        ok &= cr >= -tol * scale
    return ok


def dist_points_polygon(P, V, kind, test_inside=True):
    P = np.atleast_2d(P)
    if len(V) == 1:
        diff = P - V[0]
        if kind == "l2":
            return np.sqrt(np.sum(diff * diff, axis=1))
        return np.max(np.abs(diff), axis=1)
    out = np.full(len(P), np.inf)
    for a, b in _edges(V):
        out = np.minimum(out, dist_points_segment(P, a, b, kind))
    if test_inside and len(V) >= 3:
        out[inside(P, V)] = 0.0
    return out


def clipped_extremes(V, rho, kind, center=(0.0, 0.0), arc_samples=2048):
    """Points whose convex hull is (V-polygon) cap ball(center, rho).

    Exact for the sup-norm ball.  For the Euclidean disk, the circular
    boundary is sampled with ``arc_samples`` angles.
    """
    c = np.asarray(center, float)
    W = np.asarray(V, float) - c
    out = []
    if kind == "l2":
        nv = np.sqrt(np.sum(W * W, axis=1))
    else:
        nv = np.max(np.abs(W), axis=1)
    out.extend(W[nv <= rho * (1 + _EPS) + _EPS])
    for a, b in _edges(W):
        d = b - a
        ts = []
        if kind == "l2":
            A = d @ d
            B = 2 * a @ d
            Cc = a @ a - rho * rho
            disc = B * B - 4 * A * Cc
            if A > 0 and disc >= 0:
                s = np.sqrt(disc)
                ts += [(-B - s) / (2 * A), (-B + s) / (2 * A)]
        else:
            for i in range(2):
                if d[i] != 0:
                    ts += [(rho - a[i]) / d[i], (-rho - a[i]) / d[i]]
        for t in ts:
            if -_EPS <= t <= 1 + _EPS:
                q = a + min(max(t, 0.0), 1.0) * d
                nq = np.sqrt(q @ q) if kind == "l2" else np.max(np.abs(q))
                if nq <= rho * (1 + 1e-9) + 1e-12:
                    out.append(q)
    if kind == "l2":
        th = np.linspace(0, 2 * np.pi, arc_samples, endpoint=False)
        ring = rho * np.column_stack([np.cos(th), np.sin(th)])
    else:
        ring = np.array([[rho, rho], [rho, -rho], [-rho, rho], [-rho, -rho]], float)
    if len(W) >= 3:
        out.extend(ring[inside(ring, W)])
    if not out:
        return np.zeros((0, 2))
    return np.array(out) + c
