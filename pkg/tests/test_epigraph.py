import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from truncdist.epigraph import (GriddedFunction, HolderModulus, NodeFunction, PointMap,
                                argmin_set, check_comp_inner, check_comp_outer,
                                check_epi_composition, check_holder_sum, check_inf_projection,
                                check_level_set_estimate, check_solution_estimates,
                                check_supnorm_bound, epi_cloud, epi_composition,
                                epi_composition_exact, epi_oracle_dl, gridded_indicator,
                                indicator_function, inf_projection, kenmochi_dl,
                                kenmochi_feasible, linear_inverse_map, shift,
                                solution_summary)
from truncdist.errors import InputError, PreconditionError
from truncdist.experiments import argmin_counterexample
from truncdist.metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, sample_interval,
                                   trunc_hausdorff)

R1 = MetricSpace.euclidean(1)
BOX = [-2, 2]


def G(func, box=BOX, step=0.01, **kw):
    return GriddedFunction.from_callable(func, box, step, **kw)


def sq(x):
    return x * x


# point clouds of epigraphs

def test_cloud_of_constant():
    f = G(lambda x: 0 * x, [-1, 1], 0.5)
    cloud = epi_cloud(f, 1.0, 0.5)
    levels = sorted(set(cloud.points[:, 1].tolist()))
    assert levels == [0.0, 0.5, 1.0]
    assert len(cloud) == 5 * 3


def test_cloud_of_indicator_is_one_fiber():
    f = G(lambda x: np.where(np.abs(x) < 1e-12, 0.0, INF), [-1, 1], 0.5)
    cloud = epi_cloud(f, 1.0, 0.5)
    assert set(cloud.points[:, 0].tolist()) == {0.0}


def test_cloud_of_parabola_drops_high_nodes():
    f = G(sq, BOX, 0.1)
    cloud = epi_cloud(f, 1.0, 0.1)
    assert np.all(np.abs(cloud.points[:, 0]) <= 1.0 + 1e-12)
    assert np.all(cloud.points[:, 1] >= cloud.points[:, 0] ** 2 - 1e-12)


def test_empty_epigraph_flag():
    f = G(lambda x: np.full_like(x, INF), [-1, 1], 0.5)
    cloud = epi_cloud(f, 1.0, 0.5)
    assert cloud.empty and cloud.meta.get("empty_epigraph")
    with pytest.warns(RuntimeWarning):
        assert kenmochi_dl(f, G(sq), 1.0) == INF


# Kenmochi distance

def test_kenmochi_identical():
    f = G(sq)
    assert kenmochi_dl(f, f, 2.0) == 0.0


def test_kenmochi_vertical_shift():
    f, g = G(sq), G(lambda x: x * x + 0.1)
    assert kenmochi_dl(f, g, 2.0) == pytest.approx(0.1, abs=1e-9)
    assert kenmochi_feasible(f, g, 2.0, 0.1 + 1e-9)
    assert not kenmochi_feasible(f, g, 2.0, 0.09)


def test_kenmochi_agrees_with_cloud_oracle():
    f, g = G(sq, step=0.05), G(lambda x: np.abs(x - 0.3), step=0.05)
    slack = 0.05 + 1e-9
    assert abs(kenmochi_dl(f, g, 1.5) - epi_oracle_dl(f, g, 1.5, 0.01)) <= slack


def test_kenmochi_indicator_consistency():
    C = sample_interval(-1, 0.5, 0.05)
    D = sample_interval(-0.8, 1, 0.05)
    got = kenmochi_dl(indicator_function(C), indicator_function(D), 1.5)
    assert got == pytest.approx(trunc_hausdorff(C, D, 1.5), abs=1e-9)
    want = oracles.dl(oracles.pts(C.points.ravel()), oracles.pts(D.points.ravel()), 1.5)
    assert got == pytest.approx(want, abs=1e-9)


def test_argmin_counterexample():
    dl, exs = argmin_counterexample()
    assert dl.lhs <= 0.01 + 1e-9
    assert exs.lhs == INF


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(0.1, 2), st.floats(0.1, 2))
def test_kenmochi_symmetry_monotonicity_translation(c, r1, r2):
    f = G(sq, step=0.05)
    g = G(lambda x: np.abs(x - 0.5), step=0.05)
    lo, hi = sorted((r1, r2))
    assert kenmochi_dl(f, g, lo) == kenmochi_dl(g, f, lo)
    assert kenmochi_dl(f, g, lo) <= kenmochi_dl(f, g, hi) + 1e-12
    assert kenmochi_dl(f, shift(f, c), hi) <= abs(c) + 1e-9


# solution summaries and estimates

def test_solution_summary():
    zero = G(lambda x: 0 * x, [-1, 1], 0.5)
    s = solution_summary(zero, [0.0])
    assert s.infimum == 0.0 and len(s.argmin_eps[0.0]) == len(zero)
    s = solution_summary(G(sq, BOX, 0.1), [0.01])
    assert s.infimum == 0.0
    assert np.allclose(sorted(s.argmin_eps[0.01].points.ravel()), [-0.1, 0.0, 0.1])
    s = solution_summary(G(lambda x: np.full_like(x, INF), [-1, 1], 0.5), [0.0])
    assert s.infimum == INF and s.argmin_eps[0.0].empty


def test_argmin_nesting():
    f = G(lambda x: np.abs(x) + 0.3 * np.sin(5 * x))
    small, big = argmin_set(f, 0.05), argmin_set(f, 0.2)
    assert oracles.excess([tuple(p) for p in small.points], [tuple(p) for p in big.points]) == 0.0


def test_solution_estimates_examples():
    f = G(sq)
    rep = check_solution_estimates(f, f, 0.0, 0.25, 2.0)
    assert rep.lhs == 0.0 and rep.status == "pass"
    rep = check_solution_estimates(f, G(lambda x: x * x + 0.1), 0.0, 0.25, 2.0)
    assert rep.details["inf_gap"] == pytest.approx(0.1)
    assert rep.details["argmin_excess"] == 0.0
    assert rep.rhs == pytest.approx(0.1, abs=1e-9) and rep.status == "pass"
    f, g = G(np.abs), G(lambda x: np.abs(x - 0.2))
    rep = check_solution_estimates(f, g, 0.05, 0.5, 2.0)
    # [0.15, 0.25] sits inside the 0.5-argmin [-0.5, 0.5], so the excess vanishes
    want = oracles.excess([tuple(p) for p in argmin_set(g, 0.05).points],
                          [tuple(p) for p in argmin_set(f, 0.5).points])
    assert rep.details["argmin_excess"] == want == 0.0
    # moving (x, a) to (x + 0.1, a + 0.1) maps one epigraph into the other
    assert rep.rhs == pytest.approx(0.1, abs=1e-9) and rep.status == "pass"


def test_level_set_estimate_examples():
    f = G(sq)
    rep = check_level_set_estimate(f, f, 0.5, 0.6, 2.0)
    assert rep.lhs == 0.0 and rep.status == "pass"
    rep = check_level_set_estimate(f, G(lambda x: x * x + 0.1), 1.0, 1.15, 2.0)
    assert rep.lhs <= 0.1 + 1e-9 and rep.status == "pass"
    rep = check_level_set_estimate(G(np.abs), G(lambda x: np.abs(x) - 0.1), 0.5, 0.65, 2.0)
    assert rep.lhs <= rep.rhs + 1e-9 and rep.status == "pass"


# sup-norm and Hoelder sums

def test_supnorm_examples():
    f = G(sq)
    assert check_supnorm_bound(f, f, 2.0).lhs == 0.0
    rep = check_supnorm_bound(f, G(lambda x: x * x + 0.1), 2.0)
    assert rep.lhs == pytest.approx(0.1, abs=1e-9) and rep.rhs == pytest.approx(0.1)
    assert rep.status == "pass"


def test_supnorm_both_readings_of_the_region():
    # far from 0 f is small while g grows, so the two readings select different nodes
    f = G(lambda x: 0.1 * x * x, box=[-3, 3], step=0.05)
    g = G(lambda x: 0.1 * x * x + 0.2 * np.abs(x), box=[-3, 3], step=0.05)
    rho = 1.0
    xs = f.nodes[:, 0]
    want = {}
    for reading in ("union-first", "intersect-first"):
        keep = [(f.values[i] <= rho or g.values[i] <= rho) and abs(x) <= rho + 1e-12
                if reading == "union-first" else
                f.values[i] <= rho or (g.values[i] <= rho and abs(x) <= rho + 1e-12)
                for i, x in enumerate(xs)]
        want[reading] = max(abs(f.values[i] - g.values[i]) for i in range(len(xs)) if keep[i])
        rep = check_supnorm_bound(f, g, rho, reading=reading)
        assert rep.rhs == pytest.approx(want[reading], abs=1e-12)
        assert rep.status == "pass"
    assert want["union-first"] < want["intersect-first"]
    with pytest.raises(InputError):
        check_supnorm_bound(f, g, rho, reading="sideways")


def test_supnorm_net_form():
    f = G(np.abs, step=0.05)
    g = G(lambda x: np.abs(x) + 0.05 * np.cos(3 * x), step=0.05)
    C = FiniteSet(R1, np.linspace(-2, 2, 9).reshape(-1, 1))
    rep = check_supnorm_bound(f, g, 1.0, C=C, modulus=HolderModulus(1.0, 1.2))
    assert rep.status == "pass"
    with pytest.raises(PreconditionError):
        check_supnorm_bound(f, g, 1.0, C=C, modulus=HolderModulus(1.0, 0.1))


def test_holder_sum_examples():
    f1 = G(np.abs)
    f2 = gridded_indicator(lambda x: (x >= -1e-12) & (x <= 1 + 1e-12), BOX, 0.01)
    g2 = gridded_indicator(lambda x: (x >= 0.1 - 1e-12) & (x <= 1 + 1e-12), BOX, 0.01)
    mod = HolderModulus(1.0, 1.0)
    rep = check_holder_sum(f1, f2, f1, f2, mod, 1.0)
    assert rep.lhs == 0.0 and rep.status == "pass"
    rep = check_holder_sum(f1, f2, f1, g2, mod, 1.0)
    assert rep.details["eta"] == pytest.approx(0.1, abs=1e-9)
    assert rep.rhs <= 0.2 + 1e-9 and rep.status == "pass"


# compositions

def test_comp_inner_identity_and_linear():
    f = G(sq, step=0.05)
    ident = linear_inverse_map([[1.0]])
    rep = check_comp_inner(f, f, ident, ident, RadiusBundle(1.0))
    assert rep.lhs == 0.0 and rep.status == "pass"
    g = shift(f, 0.1)
    half = linear_inverse_map([[2.0]])
    rep = check_comp_inner(f, g, half, half, RadiusBundle(1.0))
    assert rep.lhs == pytest.approx(0.1, abs=1e-9)
    assert rep.status == "pass"
    a = G(np.abs, step=0.05)
    rep = check_comp_inner(a, a, ident, linear_inverse_map([[1.25]]), RadiusBundle(1.0))
    assert rep.status == "pass"


def test_comp_outer_examples():
    xs = np.round(np.arange(-100, 101) * 0.01, 12)
    F = PointMap.from_callable(lambda x: x, xs)
    Gm = PointMap.from_callable(lambda x: x + 0.2, xs)
    for k in (1.0, 2.0):
        f = G(lambda y, k=k: k * np.abs(y), [-3, 3], 0.01)
        same = check_comp_outer(f, F, F, HolderModulus(1.0, k), RadiusBundle(1.0))
        assert same.lhs == 0.0
        rep = check_comp_outer(f, F, Gm, HolderModulus(1.0, k), RadiusBundle(1.0))
        assert rep.details["dl_graphs"] == pytest.approx(0.2, abs=1e-9)
        assert rep.lhs <= k * 0.2 + 1e-9 and rep.status == "pass"


# inf-projections and epi-compositions

def test_inf_projection():
    f1, f2 = G(np.abs), G(lambda x: np.abs(x - 1))
    g1, g2 = shift(f1, 0.1), shift(f2, 0.05)
    rep = check_inf_projection([f1], [g1], 2.0)
    assert rep.lhs == rep.rhs
    rep = check_inf_projection([f1, f2], [g1, g2], 2.0)
    assert rep.lhs <= 0.1 + 1e-9 and rep.status == "pass"
    assert check_inf_projection([f1, f2], [f2, f1], 2.0).lhs == 0.0
    with pytest.raises(InputError):
        inf_projection([])


def test_inf_projection_epigraph_is_union():
    f1, f2 = G(np.abs, step=0.1), G(lambda x: np.abs(x - 1), step=0.1)
    m = inf_projection([f1, f2])
    for level in (0.0, 0.3, 1.0):
        union = (f1.values <= level) | (f2.values <= level)
        assert np.array_equal(m.values <= level, union)


def test_epi_composition_identity_and_shift():
    f = G(sq, step=0.1)
    ident = PointMap.from_callable(lambda x: x, f.nodes)
    Ff = epi_composition(f, ident, BOX, 0.1)
    assert np.allclose(Ff.values, f.values)
    moved = PointMap.from_callable(lambda x: x + 0.5, f.nodes)
    Ff = epi_composition(f, moved, [-1.5, 2.5], 0.1)
    fin = np.isfinite(Ff.values)
    y = Ff.nodes[fin, 0]
    assert np.allclose(Ff.values[fin], (y - 0.5) ** 2, atol=0.1 * 2.5)
    exact = epi_composition_exact(f, moved)
    assert np.allclose(exact.values, (exact.nodes[:, 0] - 0.5) ** 2)


def test_epi_composition_check():
    f = G(sq, step=0.05)
    F = PointMap.from_callable(lambda x: x, f.nodes)
    Gm = PointMap.from_callable(lambda x: x + 0.1, f.nodes)
    rep = check_epi_composition(f, f, F, Gm, HolderModulus(1.0, 1.0), RadiusBundle(1.0))
    assert rep.lhs <= 0.1 + 1e-9 and rep.status == "pass"


def test_node_function_is_infinite_off_nodes():
    f = NodeFunction(R1, np.array([[0.0], [1.0]]), np.array([1.0, 2.0]))
    assert f(np.array([[0.5]]))[0] == INF
