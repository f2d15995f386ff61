"""Solver loop behavior: hand-checked steps, traces, determinism."""

import numpy as np
import pytest

from proxcert.core import CompositeObjective, SmoothOracle
from proxcert.prox import ProxSpec, make_prox_oracle
from proxcert.schedules import ThetaSchedule, backtracking_step, fixed_step
from proxcert.solvers import (
    momentum_update,
    prox_grad_step,
    prox_subgrad_step,
    run_algorithm1,
    run_algorithm2,
)


def _quad_obj(L: float = 1.0, psi: ProxSpec | None = None) -> CompositeObjective:
    phi = SmoothOracle(
        value=lambda x: 0.5 * L * float(x @ x),
        gradient=lambda x: L * np.asarray(x, dtype=float),
        lipschitz=L,
    )
    return CompositeObjective(
        phi=phi, psi=make_prox_oracle(psi or ProxSpec.zero()), dim=1)


def test_prox_grad_step_hand_values():
    obj = _quad_obj(1.0)
    x_next, g, g_phi, g_psi = prox_grad_step(obj, np.array([1.0]), 1.0)
    assert x_next == pytest.approx([0.0])
    assert g == pytest.approx([1.0])
    assert g_phi == pytest.approx([1.0])
    assert g_psi == pytest.approx([0.0])


def test_prox_grad_step_projection_split():
    # phi = 0, psi = box [0, 1]: step from y = 2 projects to 1 and the
    # normal cone at 1 absorbs the whole step vector.
    phi = SmoothOracle(value=lambda x: 0.0,
                       gradient=lambda x: np.zeros_like(np.asarray(x, float)),
                       lipschitz=0.0)
    obj = CompositeObjective(
        phi=phi, psi=make_prox_oracle(ProxSpec.box([0.0], [1.0])), dim=1)
    x_next, g, g_phi, g_psi = prox_grad_step(obj, np.array([2.0]), 1.0)
    assert x_next == pytest.approx([1.0])
    assert g == pytest.approx([1.0])
    assert g_psi == pytest.approx([1.0])


def test_momentum_update_hand_value():
    # coefficient theta_next (1 - theta)/theta = 0.4 * 0.5 / 0.5 = 0.4
    y = momentum_update(np.array([1.0]), np.array([0.0]), 0.5, 0.4)
    assert y == pytest.approx([1.4])


def test_momentum_update_validates_range():
    with pytest.raises(ValueError):
        momentum_update(np.array([1.0]), np.array([0.0]), 0.0, 0.5)


def test_unit_momentum_quadratic_solves_in_one_step():
    obj = _quad_obj(1.0)
    trace = run_algorithm1(obj, ThetaSchedule("constant_one"),
                           fixed_step(1.0), np.array([1.0]), 5)
    for rec in trace.records:
        assert rec.x_next == pytest.approx([0.0])
    assert trace.algorithm == "prox_grad"


def test_accel_tag_and_theta_column():
    obj = _quad_obj(1.0)
    trace = run_algorithm1(obj, ThetaSchedule("fista"),
                           fixed_step(0.5), np.array([1.0]), 4)
    assert trace.algorithm == "accel_prox_grad"
    assert trace.records[0].theta == 1.0
    assert trace.records[1].theta == pytest.approx((np.sqrt(5.0) - 1.0) / 2.0)


def test_run_is_deterministic():
    obj = _quad_obj(2.0, ProxSpec.l1(0.3))
    a = run_algorithm1(obj, ThetaSchedule("fista"), fixed_step(0.4),
                       np.array([1.7]), 50)
    b = run_algorithm1(obj, ThetaSchedule("fista"), fixed_step(0.4),
                       np.array([1.7]), 50)
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.x_next, rb.x_next)
        assert ra.f_x_next == rb.f_x_next


def test_backtracking_run_records_accepted_steps():
    obj = _quad_obj(2.0)
    trace = run_algorithm1(obj, ThetaSchedule("fista"),
                           backtracking_step(t_init=1.0, beta=0.5,
                                             monotone=True),
                           np.array([1.0]), 10)
    ts = [rec.t for rec in trace.records]
    assert all(t <= 0.5 + 1e-15 for t in ts)
    assert all(t1 >= t2 for t1, t2 in zip(ts, ts[1:]))


def test_rejects_zero_iterations():
    obj = _quad_obj(1.0)
    with pytest.raises(ValueError):
        run_algorithm1(obj, ThetaSchedule("fista"), fixed_step(1.0),
                       np.array([1.0]), 0)


# -- subgradient loop ---------------------------------------------------------


def _abs_obj(psi: ProxSpec | None = None) -> CompositeObjective:
    phi = SmoothOracle(value=lambda x: float(np.abs(x).sum()),
                       gradient=lambda x: np.sign(np.asarray(x, float)),
                       lipschitz=None)
    return CompositeObjective(
        phi=phi, psi=make_prox_oracle(psi or ProxSpec.zero()), dim=1)


def test_subgrad_step_plain():
    obj = _abs_obj()
    x_next, g, g_phi, g_psi = prox_subgrad_step(
        obj, lambda x: np.sign(x), np.array([2.0]), 1.0)
    assert x_next == pytest.approx([1.0])
    assert g == pytest.approx([1.0])
    assert g_psi == pytest.approx([0.0])


def test_subgrad_step_projected():
    obj = _abs_obj(ProxSpec.box([0.0], [1.0]))
    x_next, _, _, _ = prox_subgrad_step(
        obj, lambda x: np.sign(x), np.array([0.5]), 1.0)
    assert x_next == pytest.approx([0.0])


def test_subgrad_oscillation_band():
    # |x| with constant t = 0.1 from 0.35: after entering the band the
    # iterates bounce inside [-0.1, 0.1] forever.
    obj = _abs_obj()
    trace = run_algorithm2(obj, lambda x: np.sign(x), np.array([0.35]), 30,
                           steps=[0.1] * 30)
    xs = [float(rec.x_next[0]) for rec in trace.records]
    assert xs[:4] == pytest.approx([0.25, 0.15, 0.05, -0.05])
    for x in xs[3:]:
        assert abs(x) <= 0.1 + 1e-15


def test_subgrad_zero_means_prox_fixed_point():
    obj = _abs_obj()
    x_next, _, _, _ = prox_subgrad_step(
        obj, lambda x: np.zeros_like(x), np.array([0.7]), 1.0)
    assert x_next == pytest.approx([0.7])


def test_normalized_mode_stops_early_at_zero_subgradient():
    obj = _abs_obj()
    sub = lambda x: np.sign(x)  # sign(0) = 0 ends the run
    # 0.375 and 0.125 are binary-exact, so the walk hits 0.0 exactly
    trace = run_algorithm2(obj, sub, np.array([0.375]), 10,
                           alphas=[0.125] * 10)
    assert trace.optimal_early
    assert len(trace.records) == 3
    assert trace.step_kind == "normalized"


def test_sequence_length_validated():
    obj = _abs_obj()
    with pytest.raises(ValueError):
        run_algorithm2(obj, lambda x: np.sign(x), np.array([1.0]), 10,
                       steps=[0.1] * 5)
    with pytest.raises(ValueError):
        run_algorithm2(obj, lambda x: np.sign(x), np.array([1.0]), 5,
                       steps=[0.1] * 5, alphas=[0.1] * 5)


def test_trace_iterates_prepends_x0():
    obj = _quad_obj(1.0)
    trace = run_algorithm1(obj, ThetaSchedule("constant_one"),
                           fixed_step(0.5), np.array([1.0]), 3)
    pts = trace.iterates()
    assert pts[0] == pytest.approx([1.0])
    assert len(pts) == 4
