"""Momentum coefficient schedules and step-size rules.

The momentum sequence theta_k always starts at 1. The accelerated recurrence
picks theta_{k+1} as the positive root of u^2 = theta_k^2 (1 - u); the simple
alternative is theta_k = 2/(k+2). Step sizes are either fixed or found by
backtracking against the quadratic-model decrease condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ProxOracle, SmoothOracle, inner, norm_sq

__all__ = [
    "THETA_KINDS",
    "next_theta_fista",
    "theta_two_over",
    "validate_theta_pair",
    "ThetaSchedule",
    "StepRule",
    "fixed_step",
    "backtracking_step",
    "decrease_holds",
    "backtrack",
    "BacktrackingError",
]

THETA_KINDS = ("constant_one", "fista", "two_over_kplus2", "custom")

THETA_PAIR_TOL = 1e-12
FISTA_RESIDUAL_TOL = 1e-12


class BacktrackingError(RuntimeError):
    """Backtracking exhausted its shrink budget without an acceptable step."""


def next_theta_fista(theta: float) -> float:
    """Positive root u of u^2 + theta^2 u - theta^2 = 0, i.e. u^2 = theta^2(1-u)."""
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta!r}")
    u = 0.5 * theta * (math.sqrt(theta * theta + 4.0) - theta)
    residual = abs(u * u - theta * theta * (1.0 - u))
    if residual > FISTA_RESIDUAL_TOL:
        raise ArithmeticError(f"recurrence residual {residual:.3e} out of tolerance")
    return u


def theta_two_over(k: int) -> float:
    """theta_k = 2/(k+2); equals 1 at k = 0."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    return 2.0 / (k + 2.0)


def validate_theta_pair(theta_k: float, theta_next: float, tol: float = THETA_PAIR_TOL) -> bool:
    """True when theta_next^2 >= theta_k^2 (1 - theta_next), within tol."""
    return theta_next * theta_next >= theta_k * theta_k * (1.0 - theta_next) - tol


class ThetaSchedule:
    """Mutable momentum sequence; build (or restart) a fresh one per run.

    kind "constant_one" keeps theta = 1 (no extrapolation), "fista" follows
    the accelerated recurrence, "two_over_kplus2" uses 2/(k+2), and "custom"
    consumes a caller-supplied list, validated eagerly: theta_0 = 1 and every
    entry in (0, 1].
    """

    def __init__(self, kind: str, values=None):
        if kind not in THETA_KINDS:
            raise ValueError(f"unknown theta schedule {kind!r}; choose from {THETA_KINDS}")
        self.kind = kind
        if kind == "custom":
            if values is None:
                raise ValueError("custom schedule needs an explicit value list")
            vals = np.asarray(values, dtype=float)
            if vals.ndim != 1 or vals.size < 1:
                raise ValueError("custom schedule must be a nonempty 1-D sequence")
            if vals[0] != 1.0:
                raise ValueError("custom schedule must start at theta_0 = 1")
            if np.any(vals <= 0.0) or np.any(vals > 1.0):
                raise ValueError("custom schedule values must lie in (0, 1]")
            self._values = vals
        else:
            if values is not None:
                raise ValueError(f"{kind!r} schedule takes no value list")
            self._values = None
        self.restart()

    def restart(self) -> None:
        self.k = 0
        self.current = 1.0

    def advance(self) -> float:
        """Move to iteration k+1 and return theta_{k+1}."""
        k_next = self.k + 1
        if self.kind == "constant_one":
            nxt = 1.0
        elif self.kind == "fista":
            nxt = next_theta_fista(self.current)
        elif self.kind == "two_over_kplus2":
            nxt = theta_two_over(k_next)
        else:
            if k_next >= self._values.size:
                raise IndexError(
                    f"custom schedule exhausted at k = {k_next} "
                    f"(has {self._values.size} entries)"
                )
            nxt = float(self._values[k_next])
        self.k = k_next
        self.current = nxt
        return nxt


@dataclass(frozen=True)
class StepRule:
    """Step-size policy: a fixed t, or backtracking with shrink factor beta.

    With monotone=True the search at iteration k starts from the previously
    accepted step instead of t_init, so accepted steps never increase.
    """

    kind: str  # "fixed" | "backtracking"
    t: float | None = None
    t_init: float = 1.0
    beta: float = 0.5
    monotone: bool = False
    max_shrinks: int = 100

    def __post_init__(self):
        if self.kind not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.kind == "fixed":
            if self.t is None or not self.t > 0:
                raise ValueError("fixed rule needs a positive step t")
        else:
            if not self.t_init > 0:
                raise ValueError("t_init must be positive")
            if not 0.0 < self.beta < 1.0:
                raise ValueError("beta must lie in (0, 1)")
            if self.max_shrinks < 1:
                raise ValueError("max_shrinks must be at least 1")


def fixed_step(t: float) -> StepRule:
    return StepRule(kind="fixed", t=t)


def backtracking_step(
    t_init: float = 1.0, beta: float = 0.5, monotone: bool = False, max_shrinks: int = 100
) -> StepRule:
    return StepRule(
        kind="backtracking", t_init=t_init, beta=beta, monotone=monotone, max_shrinks=max_shrinks
    )


def decrease_holds(
    phi: SmoothOracle, psi: ProxOracle, y, x_next, t: float, tol: float | None = None
) -> bool:
    """Check f(x_next) against the step's quadratic model around y.

    The full condition compares phi(x_next) + psi(x_next) with
    phi(y) + <grad phi(y), x_next - y> + ||x_next - y||^2/(2t) + psi(x_next);
    the psi(x_next) term appears on both sides, so only the phi parts are
    compared here. Since x_next minimizes the model, passing at x_next is the
    same as passing at the model's minimizer.
    """
    if not t > 0:
        raise ValueError("step size must be positive")
    y = np.asarray(y, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    d = x_next - y
    model = float(phi.value(y)) + inner(phi.gradient(y), d) + norm_sq(d) / (2.0 * t)
    if tol is None:
        tol = 1e-12 * max(1.0, abs(model))
    return float(phi.value(x_next)) <= model + tol


def backtrack(
    phi: SmoothOracle,
    psi: ProxOracle,
    y,
    rule: StepRule,
    t_prev: float | None = None,
) -> tuple[float, np.ndarray]:
    """Shrink t geometrically until the decrease condition accepts the step.

    Returns the accepted (t, x_next). When phi has an L-Lipschitz gradient,
    every t <= 1/L passes, so the accepted step is at least
    min(starting t, beta/L).
    """
    if rule.kind != "backtracking":
        raise ValueError("backtrack needs a backtracking StepRule")
    t = rule.t_init if (t_prev is None or not rule.monotone) else float(t_prev)
    y = np.asarray(y, dtype=float)
    g = np.asarray(phi.gradient(y), dtype=float)
    for _ in range(rule.max_shrinks + 1):
        x_next = np.asarray(psi.prox(t, y - t * g), dtype=float)
        if decrease_holds(phi, psi, y, x_next, t):
            return t, x_next
        t = rule.beta * t
    raise BacktrackingError(
        f"no acceptable step after {rule.max_shrinks} shrinks (last t = {t:.3e}); "
        "the smooth term may not be convex-smooth at this point"
    )
