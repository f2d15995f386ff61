"""Momentum schedules, step rules, and the decrease condition."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxcert.core import SmoothOracle
from proxcert.prox import ProxSpec, make_prox_oracle
from proxcert.schedules import (
    BacktrackingError,
    ThetaSchedule,
    backtrack,
    backtracking_step,
    decrease_holds,
    fixed_step,
    next_theta_fista,
    theta_two_over,
    validate_theta_pair,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def test_fista_first_step_is_golden_ratio():
    # positive root of theta^2 + theta - 1 = 0
    assert next_theta_fista(1.0) == pytest.approx(GOLDEN, abs=1e-12)


def test_fista_step_from_half():
    # root of theta^2 - 0.25 (1 - theta) = 0, cross-checked by substitution
    got = next_theta_fista(0.5)
    assert got == pytest.approx(0.39038820320220757, abs=1e-12)
    assert got * got == pytest.approx(0.25 * (1.0 - got), abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1.0))
def test_fista_recurrence_residual(theta):
    nxt = next_theta_fista(theta)
    assert 0.0 < nxt < theta or theta == pytest.approx(nxt)
    resid = nxt * nxt - theta * theta * (1.0 - nxt)
    assert abs(resid) <= 1e-12 * max(1.0, theta * theta)


def test_two_over_values():
    assert theta_two_over(0) == 1.0
    assert theta_two_over(2) == 0.5


def test_two_over_satisfies_pair_condition():
    # 4/9 >= 1/3 at the first step
    assert theta_two_over(1) == pytest.approx(2.0 / 3.0)
    assert validate_theta_pair(1.0, 2.0 / 3.0)


def test_validate_theta_pair_hand_cases():
    assert validate_theta_pair(1.0, 2.0 / 3.0) is True
    assert validate_theta_pair(1.0, 0.1) is False


def test_schedule_starts_at_one_and_advances():
    sched = ThetaSchedule("fista")
    assert sched.current == 1.0
    first = sched.advance()
    assert first == pytest.approx(GOLDEN)
    assert sched.current == first
    sched.restart()
    assert sched.current == 1.0


def test_constant_schedule_stays_at_one():
    sched = ThetaSchedule("constant_one")
    for _ in range(5):
        assert sched.advance() == 1.0


def test_custom_schedule_range_checked_eagerly():
    with pytest.raises(ValueError):
        ThetaSchedule("custom", values=[1.0, 1.2])
    with pytest.raises(ValueError):
        ThetaSchedule("custom", values=[1.0, 0.0])
    sched = ThetaSchedule("custom", values=[1.0, 2.0 / 3.0, 0.5])
    assert sched.advance() == pytest.approx(2.0 / 3.0)


def test_custom_schedule_pair_violation_is_not_eager():
    # A recurrence-violating list still constructs; the certificate layer
    # owns that hypothesis and reports it where it is actually used.
    sched = ThetaSchedule("custom", values=[1.0, 0.1])
    assert sched.advance() == 0.1
    assert not validate_theta_pair(1.0, 0.1)


def test_custom_schedule_must_start_at_one():
    with pytest.raises(ValueError):
        ThetaSchedule("custom", values=[0.9, 0.5])


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        ThetaSchedule("sqrt_decay")


# -- step rules ---------------------------------------------------------------


def _quad(L: float) -> SmoothOracle:
    return SmoothOracle(
        value=lambda x: 0.5 * L * float(x @ x),
        gradient=lambda x: L * np.asarray(x, dtype=float),
        lipschitz=L,
    )


def test_decrease_holds_at_lipschitz_step():
    phi = _quad(1.0)
    psi = make_prox_oracle(ProxSpec.zero())
    y = np.array([1.0])
    x_next = psi.prox(1.0, y - phi.gradient(y))
    assert x_next == pytest.approx([0.0])
    assert decrease_holds(phi, psi, y, x_next, 1.0) is True


def test_decrease_fails_beyond_lipschitz_step():
    # L = 2 and t = 1 overshoots: f(x_next) = 1 > model value 0
    phi = _quad(2.0)
    psi = make_prox_oracle(ProxSpec.zero())
    y = np.array([1.0])
    x_next = psi.prox(1.0, y - phi.gradient(y))
    assert x_next == pytest.approx([-1.0])
    assert decrease_holds(phi, psi, y, x_next, 1.0) is False


def test_backtrack_accepts_first_shrink():
    phi = _quad(2.0)
    psi = make_prox_oracle(ProxSpec.zero())
    rule = backtracking_step(t_init=1.0, beta=0.5)
    t, x_next = backtrack(phi, psi, np.array([1.0]), rule)
    assert t == 0.5
    assert x_next == pytest.approx([0.0])


def test_backtrack_monotone_resumes_from_previous():
    phi = _quad(2.0)
    psi = make_prox_oracle(ProxSpec.zero())
    rule = backtracking_step(t_init=1.0, beta=0.5, monotone=True)
    t, _ = backtrack(phi, psi, np.array([1.0]), rule, t_prev=0.25)
    assert t == 0.25


def test_backtrack_gives_up_eventually():
    # A sign-flipped gradient walks uphill, so no step size can pass.
    bad = SmoothOracle(value=lambda x: float(x @ x),
                       gradient=lambda x: -2.0 * np.asarray(x, dtype=float),
                       lipschitz=None)
    psi = make_prox_oracle(ProxSpec.zero())
    rule = backtracking_step(t_init=1.0, beta=0.5, max_shrinks=10)
    with pytest.raises(BacktrackingError):
        backtrack(bad, psi, np.array([1.0]), rule)


def test_fixed_step_rule_shape():
    rule = fixed_step(0.3)
    assert rule.kind == "fixed"
    assert rule.t == 0.3


def test_step_rule_validation():
    with pytest.raises(ValueError):
        fixed_step(-1.0)
    with pytest.raises(ValueError):
        backtracking_step(t_init=1.0, beta=1.5)
