"""Forward-backward solver loops with complete iteration traces.

Two loops live here. The momentum template covers plain proximal gradient
(theta = 1 throughout) and its accelerated variants; the subgradient loop
covers nonsmooth phi, including projected subgradient when psi is an
indicator. Both record every quantity the certificate layer needs, in
particular the gradient split g = g_phi + g_psi recovered from the prox step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CompositeObjective, as_vector, norm
from .schedules import StepRule, ThetaSchedule, backtrack

__all__ = [
    "IterateRecord",
    "Trace",
    "prox_grad_step",
    "momentum_update",
    "run_algorithm1",
    "prox_subgrad_step",
    "run_algorithm2",
]


@dataclass
class IterateRecord:
    """One iteration of either loop.

    x is the iterate entering the step, y the point the (sub)gradient is
    taken at (equal to x in the subgradient loop), x_next the new iterate.
    g = (y - x_next)/t is the full step vector; g_phi is the smooth-part
    gradient (or the chosen subgradient) at y and g_psi = g - g_phi is a
    subgradient of psi at x_next by prox optimality.
    """

    k: int
    t: float
    theta: float
    x: np.ndarray
    y: np.ndarray
    x_next: np.ndarray
    g: np.ndarray
    g_phi: np.ndarray
    g_psi: np.ndarray
    f_x_next: float
    f_y: float
    phi_y: float
    psi_x_next: float


@dataclass
class Trace:
    """Full record of one solver run."""

    algorithm: str
    x0: np.ndarray
    records: list[IterateRecord] = field(default_factory=list)
    theta_kind: str | None = None
    step_kind: str | None = None
    optimal_early: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def iterates(self) -> list[np.ndarray]:
        """x_0, x_1, ..., x_K."""
        xs = [self.x0]
        xs.extend(r.x_next for r in self.records)
        return xs


def prox_grad_step(
    obj: CompositeObjective, y, t: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One forward-backward step from y with step size t.

    Returns (x_next, g, g_phi, g_psi) with x_next = prox_t(y - t grad phi(y)),
    g = (y - x_next)/t, and g_psi = g - g_phi.
    """
    if not t > 0:
        raise ValueError("step size must be positive")
    y = np.asarray(y, dtype=float)
    g_phi = np.asarray(obj.phi.gradient(y), dtype=float)
    x_next = np.asarray(obj.psi.prox(t, y - t * g_phi), dtype=float)
    g = (y - x_next) / t
    return x_next, g, g_phi, g - g_phi


def momentum_update(x_next, x, theta: float, theta_next: float) -> np.ndarray:
    """Extrapolate y = x_next + (theta_next (1 - theta)/theta)(x_next - x)."""
    if not 0.0 < theta <= 1.0 or not 0.0 < theta_next <= 1.0:
        raise ValueError("momentum coefficients must lie in (0, 1]")
    x_next = np.asarray(x_next, dtype=float)
    x = np.asarray(x, dtype=float)
    coef = theta_next * (1.0 - theta) / theta
    return x_next + coef * (x_next - x)


def run_algorithm1(
    obj: CompositeObjective,
    theta: ThetaSchedule,
    steps: StepRule,
    x0,
    iterations: int,
) -> Trace:
    """Momentum proximal-gradient template.

    Parameters
    ----------
    obj : CompositeObjective
        Composite f = phi + psi with a smooth phi.
    theta : ThetaSchedule
        Momentum schedule; restarted here, so schedules are not shared
        between concurrent runs.
    steps : StepRule
        Fixed step or backtracking. Backtracking re-tests the decrease
        condition each iteration; with monotone=True accepted steps never
        increase.
    x0 : array_like
        Starting point. y_0 = x_0 and theta_0 = 1.
    iterations : int
        Number of steps K >= 1; the trace holds records k = 0..K-1.

    Returns
    -------
    Trace
        Per-iteration records including the g = g_phi + g_psi split.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    x0 = as_vector(x0)
    theta.restart()
    x = x0.copy()
    y = x0.copy()
    th = theta.current
    t_prev: float | None = None
    records: list[IterateRecord] = []
    for k in range(iterations):
        if steps.kind == "fixed":
            t = float(steps.t)
            x_next, g, g_phi, g_psi = prox_grad_step(obj, y, t)
        else:
            t, x_next = backtrack(obj.phi, obj.psi, y, steps, t_prev)
            g_phi = np.asarray(obj.phi.gradient(y), dtype=float)
            g = (y - x_next) / t
            g_psi = g - g_phi
        records.append(
            IterateRecord(
                k=k,
                t=t,
                theta=th,
                x=x,
                y=y,
                x_next=x_next,
                g=g,
                g_phi=g_phi,
                g_psi=g_psi,
                f_x_next=obj.value(x_next),
                f_y=obj.value(y),
                phi_y=float(obj.phi.value(y)),
                psi_x_next=float(obj.psi.value(x_next)),
            )
        )
        th_next = theta.advance()
        y = momentum_update(x_next, x, th, th_next)
        x = x_next
        th = th_next
        t_prev = t
    tag = "prox_grad" if theta.kind == "constant_one" else "accel_prox_grad"
    return Trace(
        algorithm=tag,
        x0=x0,
        records=records,
        theta_kind=theta.kind,
        step_kind=steps.kind,
    )


def prox_subgrad_step(
    obj: CompositeObjective,
    subgrad: Callable[[np.ndarray], np.ndarray],
    x,
    t: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One subgradient prox step x_next = prox_t(x - t g_phi), g_phi in dphi(x).

    Returns (x_next, g, g_phi, g_psi) with g = (x - x_next)/t. With psi an
    indicator this is exactly a projected subgradient step.
    """
    if not t > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    g_phi = np.asarray(subgrad(x), dtype=float)
    x_next = np.asarray(obj.psi.prox(t, x - t * g_phi), dtype=float)
    g = (x - x_next) / t
    return x_next, g, g_phi, g - g_phi


def run_algorithm2(
    obj: CompositeObjective,
    subgrad: Callable[[np.ndarray], np.ndarray],
    x0,
    iterations: int,
    steps: Sequence[float] | None = None,
    alphas: Sequence[float] | None = None,
) -> Trace:
    """Proximal subgradient loop with caller-supplied step sequences.

    Exactly one of ``steps`` (raw step sizes t_k) and ``alphas`` (normalized
    mode, t_k = alpha_k / ||g_phi_k||) must be given; both sequences must be
    positive and at least ``iterations`` long. In normalized mode a zero
    subgradient means x is already optimal for phi + indicator-style psi, so
    the run stops early with ``optimal_early`` set; the trace then holds only
    the completed iterations.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if (steps is None) == (alphas is None):
        raise ValueError("give exactly one of steps= or alphas=")
    seq = np.asarray(steps if steps is not None else alphas, dtype=float)
    if seq.ndim != 1 or seq.size < iterations:
        raise ValueError(f"need at least {iterations} step entries, got {seq.size}")
    if np.any(seq[:iterations] <= 0.0):
        raise ValueError("step sizes must be positive")

    x0 = as_vector(x0)
    x = x0.copy()
    records: list[IterateRecord] = []
    optimal_early = False
    for k in range(iterations):
        g_phi = np.asarray(subgrad(x), dtype=float)
        if alphas is not None:
            gn = norm(g_phi)
            if gn == 0.0:
                optimal_early = True
                break
            t = float(seq[k]) / gn
        else:
            t = float(seq[k])
        x_next = np.asarray(obj.psi.prox(t, x - t * g_phi), dtype=float)
        g = (x - x_next) / t
        records.append(
            IterateRecord(
                k=k,
                t=t,
                theta=1.0,
                x=x,
                y=x,
                x_next=x_next,
                g=g,
                g_phi=g_phi,
                g_psi=g - g_phi,
                f_x_next=obj.value(x_next),
                f_y=obj.value(x),
                phi_y=float(obj.phi.value(x)),
                psi_x_next=float(obj.psi.value(x_next)),
            )
        )
        x = x_next
    return Trace(
        algorithm="prox_subgrad",
        x0=x0,
        records=records,
        theta_kind=None,
        step_kind="normalized" if alphas is not None else "explicit",
        optimal_early=optimal_early,
    )
