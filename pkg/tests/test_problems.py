"""Problem registry: certified references, JSON round-trips, seeds."""

import json
import math
import os

import numpy as np
import pytest

from proxcert.certificates import rate_accel
from proxcert.problems import (
    SEED_ENV_VAR,
    builtin_names,
    get_problem,
    load_problem,
    make_box_qp,
    make_l1_regression,
    make_lasso,
    make_least_squares,
    reference_optimum,
    reference_points,
    save_problem,
)
from proxcert.schedules import ThetaSchedule, fixed_step
from proxcert.solvers import run_algorithm1


def test_least_squares_identity_design():
    inst = make_least_squares(np.eye(2), np.array([1.0, 2.0]),
                              np.zeros(2), name="t")
    assert inst.x_bar == pytest.approx([1.0, 2.0])
    assert inst.f_bar == 0.0
    assert inst.L == pytest.approx(1.0, rel=1e-5)
    assert inst.dist_x0 == pytest.approx(math.sqrt(5.0))
    assert inst.fstar_strategy == "analytic"


def test_least_squares_1d():
    inst = make_least_squares(np.array([[2.0]]), np.array([2.0]),
                              np.array([0.0]), name="t")
    assert inst.x_bar == pytest.approx([1.0])
    assert inst.L == pytest.approx(4.0, rel=1e-5)
    assert inst.dist_x0 == pytest.approx(1.0)


def test_least_squares_zero_rhs():
    inst = make_least_squares(np.eye(2), np.zeros(2), np.array([3.0, -4.0]),
                              name="t")
    assert inst.x_bar == pytest.approx([0.0, 0.0])
    assert inst.f_bar == 0.0
    assert inst.dist_x0 == pytest.approx(5.0)


def test_least_squares_rank_deficient_distance():
    # A kills the second coordinate, so the optimal set is a line and the
    # distance must be measured to the projection, not to any one solution.
    A = np.array([[1.0, 0.0]])
    inst = make_least_squares(A, np.array([2.0]), np.array([0.0, 5.0]),
                              name="t")
    assert inst.f_bar == pytest.approx(0.0)
    assert inst.dist_x0 == pytest.approx(2.0)
    assert inst.fstar_strategy == "unavailable"


def test_lasso_soft_threshold_fixed_point():
    inst = make_lasso(np.eye(1), np.array([3.0]), 1.0, np.zeros(1), name="t")
    assert inst.x_bar == pytest.approx([2.0], abs=1e-8)
    assert inst.f_bar == pytest.approx(2.5, abs=1e-8)


def test_lasso_large_penalty_zero_solution():
    A = np.array([[1.0, 0.3], [0.2, 0.8]])
    b = np.array([1.0, -0.5])
    lam = float(np.max(np.abs(A.T @ b))) * 1.05
    inst = make_lasso(A, b, lam, np.ones(2), name="t")
    assert inst.x_bar == pytest.approx([0.0, 0.0], abs=1e-10)
    assert inst.f_bar == pytest.approx(0.5 * float(b @ b), abs=1e-9)


def test_box_qp_boundary_optimum():
    inst = make_box_qp(np.eye(1), np.array([2.0]), np.array([0.0]),
                       np.array([1.0]), np.array([0.5]), name="t")
    assert inst.x_bar == pytest.approx([0.0], abs=1e-10)
    assert inst.f_bar == pytest.approx(0.0, abs=1e-8)


def test_box_qp_interior_optimum_exact():
    Q = np.diag([1.0, 4.0])
    inst = make_box_qp(Q, np.array([-1.0, -4.0]), np.array([-2.0, -2.0]),
                       np.array([2.0, 2.0]), np.zeros(2), name="t")
    assert inst.L == pytest.approx(4.0)
    assert inst.x_bar == pytest.approx([1.0, 1.0])
    assert inst.f_bar == pytest.approx(-2.5)


def test_l1_regression_componentwise():
    inst = make_l1_regression(np.eye(2), np.array([0.5, -0.5]),
                              np.zeros(2), np.ones(2), np.array([1.0, 0.2]),
                              name="t")
    assert inst.x_bar == pytest.approx([0.5, 0.0], abs=1e-7)
    assert inst.f_bar == pytest.approx(0.5, abs=1e-7)
    assert not inst.smooth
    assert inst.subgrad_bound >= math.sqrt(2.0) - 1e-12


def test_l1_regression_trivial():
    inst = make_l1_regression(np.eye(1), np.zeros(1), np.array([-1.0]),
                              np.array([1.0]), np.array([0.7]), name="t")
    assert inst.x_bar == pytest.approx([0.0], abs=1e-9)
    assert inst.f_bar == pytest.approx(0.0, abs=1e-9)


def test_builtin_names_stable():
    names = builtin_names()
    assert names == sorted(names)
    for expected in ("quad-1d", "quad-2d", "lasso-2d", "lasso-20",
                     "boxqp-2d", "boxqp-10", "l1reg-2d"):
        assert expected in names


def test_get_problem_caches_instances():
    a = get_problem("quad-2d")
    b = get_problem("quad-2d")
    assert a is b


def test_get_problem_unknown_name():
    with pytest.raises(KeyError):
        get_problem("no-such-problem")


def test_seed_env_var_changes_instance(monkeypatch):
    base = get_problem("quad-2d")
    monkeypatch.setenv(SEED_ENV_VAR, "123")
    other = get_problem("quad-2d")
    assert other.name.endswith("-s123")
    assert other.name != base.name


def test_explicit_seed_wins_over_env(monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "123")
    inst = get_problem("quad-2d", seed=9)
    assert inst.name.endswith("-s9")


def test_json_round_trip(tmp_path):
    inst = get_problem("lasso-2d")
    path = tmp_path / "prob.json"
    save_problem(inst, path)
    back = load_problem(path)
    assert back.kind == inst.kind
    assert back.dim == inst.dim
    assert back.f_bar == pytest.approx(inst.f_bar, abs=1e-9)
    assert back.dist_x0 == pytest.approx(inst.dist_x0, rel=1e-9)
    x = np.array([0.3, -0.8])
    assert back.objective.value(x) == pytest.approx(inst.objective.value(x))


def test_json_file_resolves_through_get_problem(tmp_path):
    inst = get_problem("boxqp-2d")
    path = tmp_path / "qp.json"
    save_problem(inst, path)
    back = get_problem(str(path))
    assert back.kind == "box_qp"
    assert back.f_bar == pytest.approx(inst.f_bar, abs=1e-9)


def test_json_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises((KeyError, ValueError)):
        load_problem(path)


def test_reference_never_undercuts_f_bar():
    # f_bar is reported with an accuracy radius; the true optimum can never
    # sit above f_bar + accuracy, so any feasible value must respect it.
    for name in builtin_names():
        inst = get_problem(name)
        assert inst.objective.value(inst.x_bar) >= inst.f_bar - 1e-12
        if inst.smooth:
            trace = run_algorithm1(inst.objective, ThetaSchedule("fista"),
                                   fixed_step(1.0 / inst.L), inst.x0, 400)
            achieved = min(rec.f_x_next for rec in trace.records)
            assert achieved >= inst.f_bar - inst.f_bar_accuracy - 1e-9


def test_reference_optimum_smooth_budget():
    inst = get_problem("quad-2d")
    val, acc = reference_optimum(inst, 200)
    assert val <= inst.f_bar + max(acc, 1e-9)
    assert acc >= 0.0
    with pytest.raises(ValueError):
        reference_optimum(inst, 5)


def test_rate_accuracy_estimate_is_honest():
    # the accuracy radius returned for an uncertified run must cover the
    # worst-case rate at the budget horizon
    inst = get_problem("lasso-20")
    val, acc = reference_optimum(inst, 50)
    assert val - acc <= inst.f_bar + 1e-9
    assert acc <= rate_accel(inst.L, inst.dist_x0, 50) + 1e-9


def test_reference_points_respect_domain():
    rng = np.random.default_rng(5)
    inst = get_problem("boxqp-2d")
    pts = reference_points(inst, 10, rng)
    lo = inst.data["lo"]
    hi = inst.data["hi"]
    assert len(pts) == 10
    for x, fx in pts:
        assert np.all(x >= np.asarray(lo) - 1e-12)
        assert np.all(x <= np.asarray(hi) + 1e-12)
        assert math.isfinite(fx)
        assert fx == pytest.approx(inst.objective.value(x))


def test_reference_points_unconstrained(tmp_path):
    rng = np.random.default_rng(5)
    inst = get_problem("quad-2d")
    pts = reference_points(inst, 4, rng)
    assert len(pts) == 4
    for x, fx in pts:
        assert math.isfinite(fx)


def test_power_iteration_matches_eigvalsh():
    inst = get_problem("lasso-20")
    from proxcert.problems import _mat_from
    A = _mat_from(inst.data["A"])
    true_L = float(np.linalg.eigvalsh(A.T @ A)[-1])
    assert inst.L >= true_L * (1.0 - 1e-9)
    assert inst.L <= true_L * (1.0 + 1e-5)
