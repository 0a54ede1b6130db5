import numpy as np
import pytest

import oracles
from truncdist.approx_schemes import (ConditioningFn, ConstrainedProblem, build_penalty,
                                      build_softened, check_penalty_bound, check_softening_bound,
                                      grid_argmin, run_disjunctive_experiment,
                                      solve_feasibility_approx)
from truncdist.epigraph import GriddedFunction, argmin_set
from truncdist.errors import InfeasibleApproximationError, InputError, PreconditionError
from truncdist.experiments import case_one_sweep, poor_conditioning
from truncdist.metric_core import INF, RadiusBundle, finite_set, sample_interval

BOX = [[-2.0, 2.0]]


def G(func, h=0.01, box=BOX):
    return GriddedFunction.from_callable(func, box, h)


def one_d(delta, h=0.01):
    f0, f1 = G(lambda x: x, h), G(lambda x: -x, h)
    return ConstrainedProblem(f0, (f1,)), ConstrainedProblem(f0, (G(lambda x: -x + delta, h),))


# conditioning functions

def test_conditioning_forms_round_trip():
    for psi in (ConditioningFn.power(0.5, 2.0), ConditioningFn.linear(0.25),
                ConditioningFn.table([0, 1, 2], [0, 1, 4])):
        assert psi.validate()
        for t in (0.0, 0.3, 1.7, 5.0):
            assert psi(psi.inverse(t)) == pytest.approx(t)
    assert ConditioningFn.linear(0.25)(1.0) == 4.0
    with pytest.raises(InputError):
        ConditioningFn.table([0, 2, 1], [0, 1, 2])
    with pytest.raises(InputError):
        ConditioningFn.power(0.0)


# Case I

def test_feasibility_common_point():
    C = [finite_set([0.0, 0.5]), finite_set([0.5, 1.0])]
    x1, rep = solve_feasibility_approx(C, C, 1.0, ConditioningFn.linear(1.0), 2.0)
    assert x1.tolist() == [0.5]
    assert rep.lhs == 0.0 and rep.status == "pass"


def test_feasibility_worked_instance():
    eps, delta = 0.1, 0.25
    C1 = finite_set([0.0, 1.0])
    C2 = sample_interval(0.0, 1 - delta, 0.01)
    D2 = sample_interval(eps, 1 - delta, 0.01)
    lam = eps ** -0.5
    x1, rep = solve_feasibility_approx([C1, C2], [C1, D2], lam, ConditioningFn.linear(delta), 1.0)
    rho_bar = rep.details["rho_bar"]
    assert rep.rhs == pytest.approx(rho_bar * (1 / lam + 1 / (delta * lam)) + (1 + 4 * lam) * eps)
    assert x1.tolist() == [0.0]
    assert rep.status == "pass"


def test_feasibility_objective_matches_enumeration():
    C1, C2 = finite_set([0.0, 1.0]), sample_interval(0.0, 0.75, 0.05)
    D2 = sample_interval(0.1, 0.75, 0.05)
    lam = 2.0
    x1, rep = solve_feasibility_approx([C1, C2], [C1, D2], lam, ConditioningFn.linear(0.25), 1.0)
    best = min(lam * abs(a - b) for a in (0.0, 1.0) for (b,) in oracles.pts(D2.points.ravel()))
    assert rep.details["objective"] == pytest.approx(best)


def test_feasibility_empty_truncation():
    with pytest.raises(InfeasibleApproximationError):
        solve_feasibility_approx([finite_set([5.0])], [finite_set([5.0])], 1.0,
                                 ConditioningFn.linear(1.0), 1.0)


def test_case_one_monotone():
    rows, table = case_one_sweep()
    assert all(r.passed for r in rows)
    assert [t["rhs"] for t in table] == sorted((t["rhs"] for t in table), reverse=True)


def test_poor_conditioning_tracks_prediction():
    rows, table = poor_conditioning(alphas=(2, 4))
    assert all(r.passed for r in rows)
    for t in table:
        assert t["worst_error"] <= 1.1 * t["predicted"]


# Case II: softening

def test_softened_functions():
    p, q = one_d(0.05)
    f, g = build_softened(p, q, 2.0, y_step=0.01, y_max=0.5)
    # x + 2y subject to y >= max(0, 0.05 - x) is smallest at x = 0.05, y = 0
    assert grid_argmin(g).tolist() == pytest.approx([0.05, 0.0])
    # at the actual minimizer x = 0 the cheapest slack is y = 0.05
    at0 = np.isclose(g.nodes[:, 0], 0.0) & np.isfinite(g.values)
    assert g.nodes[at0, 1].min() == pytest.approx(0.05)
    assert np.all(f.values[np.isfinite(f.values)] >= -1e-12)


def test_softened_two_constraints_bounded_by_perturbation():
    h, delta, lam = 0.05, 0.1, 2.0
    f0 = G(lambda x: x * x, h)
    fs = (G(lambda x: x - 1, h), G(lambda x: -x - 1, h))
    gs = tuple(c.with_values(c.values + delta) for c in fs)
    f, g = build_softened(ConstrainedProblem(f0, fs), ConstrainedProblem(f0, gs), lam,
                          y_step=0.05, y_max=0.5)
    both = np.isfinite(f.values) & np.isfinite(g.values)
    assert both.any()
    assert np.all(g.values[both] <= f.values[both] + (1 + 2 * lam) * delta + 1e-12)


def test_softening_exact_data_large_lambda():
    p, _ = one_d(0.0)
    rep = check_softening_bound(p, p, 1e3, ConditioningFn.power(1.0), RadiusBundle(0.3),
                                y_step=0.01)
    assert rep.lhs <= 0.02 + 1e-9
    assert rep.details["term_perturbation"] == 0.0
    assert rep.status == "pass"


def test_softening_balanced_instance():
    delta = 0.05
    p, q = one_d(delta)
    rep = check_softening_bound(p, q, delta ** -0.5, ConditioningFn.power(1.0),
                                RadiusBundle(0.3), y_step=0.01)
    t1, t2 = rep.details["term_conditioning"], rep.details["term_perturbation"]
    assert max(t1, t2) / min(t1, t2) <= 4.0
    assert rep.status == "pass"


def test_softening_small_radius_not_applicable():
    p, q = one_d(0.05)
    rep = check_softening_bound(p, q, 4.0, ConditioningFn.power(1.0),
                                RadiusBundle(0.3, rho_bar=0.1), y_step=0.01)
    assert rep.status == "not-applicable"


def test_softening_rejects_bad_conditioning():
    p, q = one_d(0.05)
    with pytest.raises(PreconditionError):
        check_softening_bound(p, q, 4.0, ConditioningFn.power(1.0, 10.0), RadiusBundle(0.3))


# Case III: penalty

def test_penalty_exact_data():
    p, _ = one_d(0.0)
    rep = check_penalty_bound(p, p, 100.0, ConditioningFn.power(1.0), RadiusBundle(0.3))
    assert rep.lhs <= 0.01 + 1e-9 and rep.status == "pass"
    f, g = build_penalty(p, p, 100.0)
    assert grid_argmin(f).tolist() == grid_argmin(g).tolist() == [0.0]


def test_penalty_lambda_sweep():
    p, q = one_d(0.05)
    firsts, seconds, lhs = [], [], []
    for lam in (1, 4, 16, 64):
        rep = check_penalty_bound(p, q, lam, ConditioningFn.power(1.0), RadiusBundle(0.3))
        assert rep.status == "pass"
        firsts.append(rep.details["term_conditioning"])
        seconds.append(rep.details["term_perturbation"])
        lhs.append(rep.lhs)
    assert firsts == sorted(firsts, reverse=True)
    assert seconds == sorted(seconds)
    assert all(b <= a + 1e-9 for a, b in zip(lhs, lhs[1:]))


def test_penalty_and_softening_rates_match():
    p, q = one_d(0.05)
    lam = 0.05 ** -0.5
    soft = check_softening_bound(p, q, lam, ConditioningFn.power(1.0), RadiusBundle(0.3),
                                 y_step=0.01)
    pen = check_penalty_bound(p, q, lam, ConditioningFn.power(1.0), RadiusBundle(0.3))
    assert soft.details["term_perturbation"] == pen.details["term_perturbation"]
    assert pen.lhs <= soft.lhs + 0.05


def test_penalty_solution_transfer():
    p, q = one_d(0.05)
    f, g = build_penalty(p, q, 16.0)
    rep = check_penalty_bound(p, q, 16.0, ConditioningFn.power(1.0), RadiusBundle(0.3))
    x = grid_argmin(g, 0.3)
    near = argmin_set(f, 2 * rep.lhs + 0.01)
    assert oracles.dist(tuple(x), [tuple(v) for v in near.points]) <= rep.lhs + 0.01 + 1e-9


# disjunctive programming

def test_disjunctive_identical():
    Cs = [finite_set([[0.0]]), finite_set([[2.0]])]
    rep = run_disjunctive_experiment(Cs, Cs, [1.0], [1.0], 3.0)
    assert rep.lhs == 0.0 and rep.rhs == 0.0


def test_disjunctive_shifted():
    Cs = [finite_set([[0.0]]), finite_set([[2.0]])]
    Ds = [finite_set([[0.05]]), finite_set([[2.0]])]
    rep = run_disjunctive_experiment(Cs, Ds, [1.0], [1.1], 3.0)
    assert rep.rhs == pytest.approx(3 * 0.1 + 2.1 * 0.05)
    assert rep.status == "pass"
    assert abs(rep.details["min_c"] - rep.details["min_d"]) <= rep.lhs + 1e-9
    assert rep.lhs < INF
