import numpy as np
import pytest

import oracles
from truncdist.approx_schemes import ConstrainedProblem
from truncdist.epigraph import GriddedFunction
from truncdist.errors import InputError
from truncdist.experiments import geneq_sharpness, kkt_sweep, setvalued_demos
from truncdist.metric_core import INF, MetricSpace, RadiusBundle, lattice, trunc_hausdorff
from truncdist.setvalued import (GriddedMapping, NearSolutionQuery, PLConvex,
                                 check_geneq_bound, check_kkt_bound, check_sum_mappings,
                                 composite_stationarity_bound, dc_mapping_bound, graph_dl,
                                 kkt_mapping, near_solution_set, normal_cone_graph,
                                 subgradient_graph)

R1 = MetricSpace.euclidean(1)
XS = lattice(-1.0, 2.0, 0.05)


def single(func, xs=XS, name=""):
    return GriddedMapping(R1, R1, xs, [[func(x)] for x in xs], name)


def flat(M):
    return sorted(float(v) for v in M.points.ravel())


# near-solution sets

def test_near_solutions_of_identity():
    S = single(lambda x: x, lattice(-1, 1, 0.05))
    got = near_solution_set(S, NearSolutionQuery(0.0, 0.1, 1.0))
    assert np.allclose(flat(got), [-0.1, -0.05, 0.0, 0.05, 0.1])


def test_near_solutions_match_graph_projection():
    S = single(lambda x: x * x - 0.5)
    q = NearSolutionQuery(0.2, 0.15, 1.0)
    G = S.graph().points
    want = sorted({g[0] for g in G if abs(g[1] - 0.2) <= 0.15 + 1e-9})
    assert flat(near_solution_set(S, q)) == want


def test_sharp_pair_inverses():
    h, L = 0.01, 5.0
    xs, xt = lattice(0.0, 1.0, h), lattice(1.0, 2.0, h)
    S = GriddedMapping(R1, R1, xs, [lattice(x, L, h) for x in xs], "S")
    T = GriddedMapping(R1, R1, xt, [lattice(1 + h, L, h) for _ in xt], "T")
    assert flat(near_solution_set(S, NearSolutionQuery(0.0, 0.0, 2.0))) == [0.0]
    Tc = GriddedMapping(R1, R1, xt, [lattice(1.0, L, h) for _ in xt], "T closed")
    assert np.allclose(flat(near_solution_set(Tc, NearSolutionQuery(0.0, 1.0, 2.0))), xt)
    assert near_solution_set(T, NearSolutionQuery(0.0, 1.0, 2.0)).empty


def test_query_validation():
    with pytest.raises(InputError):
        NearSolutionQuery(0.0, -0.1, 1.0)
    with pytest.raises(InputError):
        NearSolutionQuery(0.0, 2.0, 1.0)


# generalized equations

def test_geneq_identical_and_shifted():
    S = single(lambda x: x)
    rep = check_geneq_bound(S, S, NearSolutionQuery(0.0, 0.05, 1.0, 0.1))
    assert rep.lhs == 0.0 and rep.status == "pass"
    T = single(lambda x: x + 0.2)
    rep = check_geneq_bound(S, T, NearSolutionQuery(0.0, 0.05, 1.0, 0.3))
    dl = oracles.dl([tuple(p) for p in S.graph().points], [tuple(p) for p in T.graph().points],
                    1.0, "linf")
    assert rep.rhs == pytest.approx(dl, abs=1e-12)
    assert rep.lhs <= 0.2 + 1e-9 and rep.status == "pass"


def test_geneq_sharpness():
    rows = {r.check_id: r for r in geneq_sharpness()}
    assert rows["geneq-dl"].lhs == pytest.approx(1.0, abs=0.01 + 1e-9)
    assert rows["geneq-excess"].lhs == pytest.approx(1.0, abs=0.01 + 1e-9)
    assert all(r.passed for r in rows.values())


def test_geneq_sharpness_limit_as_step_shrinks():
    # the open interval is modelled by a step-h shift, so the gap to 1 closes with h
    for h in (0.04, 0.02, 0.01):
        rows = {r.check_id: r for r in geneq_sharpness(h=h)}
        assert abs(rows["geneq-dl"].lhs - 1.0) <= h + 1e-9
        assert rows["geneq-excess"].lhs == pytest.approx(1.0, abs=h + 1e-9)


def test_geneq_small_delta_not_applicable():
    S, T = single(lambda x: x), single(lambda x: x + 0.2)
    rep = check_geneq_bound(S, T, NearSolutionQuery(0.0, 0.05, 1.0, 0.1))
    assert rep.status == "not-applicable"


# sums of mappings

def test_sum_mappings_examples():
    zero = single(lambda x: 0.0)
    N = normal_cone_graph((0.0, 1.0), 10.0, 0.05, (-1.0, 2.0))
    rep = check_sum_mappings(zero, zero, N, N, RadiusBundle(1.0))
    assert rep.lhs == 0.0 and rep.status == "pass"
    rows = {r.check_id: r for r in setvalued_demos()}
    grad = rows["sum-mappings-gradient"]
    assert grad.rhs == pytest.approx(0.1, abs=1e-9) and grad.status == "pass"
    cones = rows["sum-mappings-cones"]
    assert cones.rhs > grad.rhs and cones.status == "pass"


# subgradient and normal-cone graphs

def test_subgradients_of_abs_and_relu():
    G = subgradient_graph(PLConvex.abs(), 2.0, 0.25)
    j0 = int(np.flatnonzero(np.isclose(G.nodes[:, 0], 0.0))[0])
    assert flat(G.at(j0)) == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
    j = int(np.flatnonzero(np.isclose(G.nodes[:, 0], 0.5))[0])
    assert flat(G.at(j)) == [1.0]
    relu = subgradient_graph(PLConvex((0.0,), (0.0, 1.0)), 2.0, 0.5)
    j0 = int(np.flatnonzero(np.isclose(relu.nodes[:, 0], 0.0))[0])
    assert flat(relu.at(j0)) == [0.0, 0.5, 1.0]
    with pytest.raises(InputError):
        PLConvex((0.0,), (1.0, 0.0))


def test_subgradient_graph_distance_and_monotonicity():
    f = subgradient_graph(PLConvex.abs(), 4.0, 0.01, (-2, 2), [0.1])
    g = subgradient_graph(PLConvex.abs(0.1), 4.0, 0.01, (-2, 2), [0.0])
    assert graph_dl(f, g, 2.0) == pytest.approx(0.1, abs=0.01 + 1e-9)
    P = subgradient_graph(PLConvex((-0.5, 0.5), (-1, 0.2, 1)), 2.0, 0.1).graph().points
    dx = P[:, None, 0] - P[None, :, 0]
    dy = P[:, None, 1] - P[None, :, 1]
    assert np.all(dx * dy >= -1e-12)


def test_interval_normal_cone():
    N = normal_cone_graph((0.0, 1.0), 2.0, 0.5, (-1.0, 2.0))
    by_node = {round(float(x), 6): flat(N.at(j)) for j, x in enumerate(N.nodes[:, 0])}
    assert by_node[0.5] == [0.0]
    assert by_node[0.0] == [-2.0, -1.5, -1.0, -0.5, 0.0]
    assert by_node[1.0] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert by_node[2.0] == []
    D = normal_cone_graph((0.1, 1.0), 2.0, 0.05, (-1.0, 2.0))
    assert 0 < graph_dl(normal_cone_graph((0.0, 1.0), 2.0, 0.05, (-1.0, 2.0)), D, 1.0) < INF


def test_polygon_normal_cone():
    sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
    C = normal_cone_graph(sq, 1.0, 0.1)
    D = normal_cone_graph([[a + 0.05, b] for a, b in sq], 1.0, 0.1)
    assert len(C.graph()) > len(C)
    assert 0 < graph_dl(C, D, 1.0) < INF
    with pytest.raises(InputError):
        normal_cone_graph([[0, 0], [1, 1], [2, 2]], 1.0, 0.1)


# DC functions

def test_dc_bound():
    a, half = PLConvex.abs(), PLConvex.abs(scale=0.5)
    assert dc_mapping_bound(half, a, half, a, 1.0).lhs == 0.0
    rep = dc_mapping_bound(half, a, half, PLConvex.abs(0.1), 1.0)
    assert rep.status == "pass"


# KKT systems

def _problem(d, h=0.05):
    box = [[-2.0, 2.0]]
    g0 = GriddedFunction.from_callable(lambda x: x * x + d * x, box, h)
    g1 = GriddedFunction.from_callable(lambda x: x - 1 - d, box, h)
    return ConstrainedProblem(g0, (g1,), (lambda x: 2 * x + d, np.ones_like))


def test_kkt_identity_is_exact():
    p = _problem(0.0)
    assert check_kkt_bound(p, p, 1.0).lhs == 0.0
    assert check_kkt_bound(p, p, 1.0, mode="sampled").lhs == 0.0


def test_kkt_perturbed():
    rep = check_kkt_bound(_problem(0.0), _problem(0.05), 1.0)
    assert rep.rhs == pytest.approx(max(0.05, 0.05, 2 * 0.05))
    assert rep.status == "pass"
    sampled = check_kkt_bound(_problem(0.0), _problem(0.05), 1.0, mode="sampled")
    assert abs(sampled.lhs - rep.lhs) <= 0.05 + 1e-9


def test_kkt_cloud_dimension():
    cloud = kkt_mapping(_problem(0.0), 1.0, 0.25)
    assert cloud.space.dim == (1 + 1) + (3 * 1 + 1)


def test_kkt_sweep_is_lipschitz():
    rows, table = kkt_sweep()
    assert all(r.passed for r in rows)
    assert [t["delta"] for t in table] == [0.01, 0.02, 0.04, 0.08]


# composite stationarity

def sq(X):
    return X[:, 0] ** 2


def jac(X):
    return 2 * X


def test_composite_identical_and_shifted():
    a = PLConvex.abs()
    rep = composite_stationarity_bound(a, a, sq, sq, 1.0, 0.1, JF=jac, JG=jac)
    assert rep.lhs == 0.0 and rep.rhs == 0.0
    up = PLConvex.abs(offset=0.3)
    assert composite_stationarity_bound(a, up, sq, sq, 1.0, 0.1, JF=jac, JG=jac).lhs == 0.0
    rep = composite_stationarity_bound(a, PLConvex.abs(0.05), sq,
                                       lambda X: X[:, 0] ** 2 + 0.02 * X[:, 0], 1.0, 0.1)
    assert rep.details["sup_value_gap"] > 0 and rep.details["dl_subgradients"] > 0
    assert rep.details["jacobians"] == "central differences"
    assert rep.status == "pass"


def test_composite_rejects_bad_norm_pair():
    a = PLConvex.abs()
    with pytest.raises(InputError):
        composite_stationarity_bound(a, a, lambda X: X[:, 0], lambda X: X[:, 0], 1.0, 0.1,
                                     norm="l2", matrix_norm="bogus")


def test_trunc_of_graphs_uses_product_max():
    xs = lattice(-3.0, 3.0, 0.05)
    S, T = single(lambda x: x, xs), single(lambda x: x + 0.3, xs)
    # (x, x) is 0.15 away from (x - 0.15, x + 0.15) in the max metric
    assert trunc_hausdorff(S.graph(), T.graph(), 1.0) == pytest.approx(0.15, abs=1e-12)
