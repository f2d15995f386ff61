"""Dual certificate states and numeric verification of the rate bounds.

Every solver step contributes its step vector g_k to a running dual vector
z_k. Two accumulation laws are implemented:

* AveragedDualState: z_k is the (t_i/theta_i)-weighted average of the g_i.
  Its bound reads  LHS_k <= -f*(z_k) + <z_k, x_0> - (S_k/2)||z_k||^2  with
  S_k = sum_{i<k} t_i/theta_i, where LHS_k is either the t_i-weighted average
  of f over the iterates ("ergodic" mode, unit momentum) or f at the newest
  iterate ("last" mode, which needs the accelerated partial-sum identity).

* ScaledDualState: z_k carries an extra rescaling rho_k >= 1 each step so the
  same kind of bound survives variable non-increasing step sizes; the final
  distance form is  f(x_k) - f_bar <= theta_{k-1}^2 dist^2 / (2 t_{k-1}).

Chasing either bound below a distance-form right-hand side gives a complete
inequality chain that is checked numerically at every iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import INF, ConjugateOracle, inner, norm_sq
from .schedules import validate_theta_pair
from .solvers import Trace

__all__ = [
    "HypothesisViolation",
    "BOUND_ATOL",
    "BOUND_RTOL",
    "ANCHOR_TOL",
    "bound_tol",
    "AveragedDualState",
    "ScaledDualState",
    "conjugate_bound",
    "scaled_conjugate_bound",
    "rhs_distance",
    "rate_prox_grad",
    "rate_accel",
    "scaled_distance_bound",
    "BoundRow",
    "BoundReport",
    "averaged_chain_report",
    "scaled_chain_report",
    "subgradient_chain_report",
    "classic_subgradient_bounds",
    "anchor_report",
    "rate_report",
    "steep_bound",
]

BOUND_ATOL = 1e-9
BOUND_RTOL = 1e-7
ANCHOR_TOL = 1e-8
_EXACT_TOL = 1e-12


class HypothesisViolation(RuntimeError):
    """A certificate update met a run outside its schedule hypotheses."""


def bound_tol(rhs: float, atol: float = BOUND_ATOL, rtol: float = BOUND_RTOL) -> float:
    """Acceptance tolerance for one inequality: max(atol, rtol * |rhs|)."""
    if math.isinf(rhs):
        return INF
    return max(atol, rtol * abs(rhs))


# ---------------------------------------------------------------------------
# Dual state accumulators.

@dataclass
class AveragedDualState:
    """Weighted-average dual vector with its matching bound left-hand side.

    mode "ergodic" requires theta_k = 1 at every step and averages the
    objective values; mode "last" tracks f at the newest iterate and checks
    the partial-sum identity S_k = (1 - theta_k) S_{k+1} each update, which
    the accelerated recurrence with a fixed step satisfies exactly.
    """

    mode: str
    k: int = 0
    s: float = 0.0
    weighted_g: np.ndarray | None = None
    z: np.ndarray | None = None
    mu: float = INF
    gamma: float = math.nan
    lhs: float = math.nan
    _t_sum: float = 0.0
    _tf_sum: float = 0.0

    def __post_init__(self):
        if self.mode not in ("ergodic", "last"):
            raise ValueError(f"mode must be 'ergodic' or 'last', got {self.mode!r}")

    def update(self, t: float, theta: float, g: np.ndarray, f_new: float) -> None:
        """Fold in step k's data: step size, momentum coefficient, step vector
        g_k = (y_k - x_{k+1})/t_k, and f(x_{k+1})."""
        if not t > 0 or not 0.0 < theta <= 1.0:
            raise ValueError("need t > 0 and theta in (0, 1]")
        if self.mode == "ergodic" and theta != 1.0:
            raise HypothesisViolation(
                f"ergodic mode requires theta_k = 1 at every step, got {theta} at k={self.k}"
            )
        w = t / theta
        s_new = self.s + w
        if self.mode == "last":
            # partial-sum identity: sum_{i<k} = (1 - theta_k) sum_{i<=k}
            if abs(self.s - (1.0 - theta) * s_new) > 1e-9 * max(1.0, s_new):
                raise HypothesisViolation(
                    "partial-sum identity violated at k="
                    f"{self.k}: schedule is outside the last-iterate hypothesis "
                    "(accelerated recurrence with a fixed step satisfies it)"
                )
        g = np.asarray(g, dtype=float)
        if self.weighted_g is None:
            self.weighted_g = w * g
        else:
            self.weighted_g = self.weighted_g + w * g
        self.z = self.weighted_g / s_new
        self.gamma = w / s_new
        self.mu = 1.0 / s_new
        self.s = s_new
        if self.mode == "ergodic":
            self._t_sum += t
            self._tf_sum += t * f_new
            self.lhs = self._tf_sum / self._t_sum
        else:
            self.lhs = f_new
        self.k += 1


@dataclass
class ScaledDualState:
    """Dual vector with step-ratio rescaling for non-increasing step sizes.

    Updates enforce theta_0 = 1, the momentum pair inequality, non-increasing
    t, and rho_k >= 1; the growth factor R_k (R_1 = 1) multiplies by rho_k
    each step. The product rho_k (1 - theta_k) = (t_{k-1}/t_k) theta_k^2 /
    theta_{k-1}^2 is tracked directly so theta_k = 1 never divides by zero.
    """

    k: int = 0
    z: np.ndarray | None = None
    mu: float = math.nan
    R: float = math.nan
    rho: float = math.nan
    t_prev: float = math.nan
    theta_prev: float = math.nan

    def update(self, t: float, theta: float, g: np.ndarray) -> None:
        if not t > 0 or not 0.0 < theta <= 1.0:
            raise ValueError("need t > 0 and theta in (0, 1]")
        g = np.asarray(g, dtype=float)
        if self.k == 0:
            if theta != 1.0:
                raise HypothesisViolation("theta_0 must equal 1")
            self.z = g.copy()
            self.mu = 1.0 / t
            self.R = 1.0
            self.rho = math.nan
        else:
            if not validate_theta_pair(self.theta_prev, theta):
                raise HypothesisViolation(
                    f"validate_theta_pair failed at k={self.k}: "
                    f"theta_prev={self.theta_prev!r}, theta={theta!r}"
                )
            if t > self.t_prev * (1.0 + _EXACT_TOL):
                raise HypothesisViolation(
                    f"step sizes must be non-increasing: t_{self.k}={t!r} "
                    f"> t_{self.k - 1}={self.t_prev!r}"
                )
            p = (self.t_prev / t) * (theta * theta) / (self.theta_prev * self.theta_prev)
            if p < (1.0 - theta) * (1.0 - _EXACT_TOL):
                raise HypothesisViolation(f"rho_{self.k} >= 1 violated (rho(1-theta)={p!r})")
            rho = p / (1.0 - theta) if theta < 1.0 else INF
            self.z = p * self.z + theta * g
            self.mu = p * self.mu
            self.R = self.R * rho
            self.rho = rho
        self.t_prev = t
        self.theta_prev = theta
        self.k += 1


# ---------------------------------------------------------------------------
# Right-hand sides.

def conjugate_bound(s: float, z, fstar: ConjugateOracle, x0) -> float:
    """-f*(z) + <z, x_0> - (s/2)||z||^2.

    An infinite f*(z) (possible on the float boundary of analytic indicator
    conjugates) is reported as +inf, marking the inequality vacuous rather
    than misreporting a violation.
    """
    if not s > 0:
        raise ValueError("weight sum must be positive")
    z = np.asarray(z, dtype=float)
    fz = fstar(z)
    if math.isinf(fz):
        return INF
    return -fz + inner(z, np.asarray(x0, dtype=float)) - 0.5 * s * norm_sq(z)


def scaled_conjugate_bound(
    state: ScaledDualState, fstar: ConjugateOracle, f_bar: float, x0
) -> float:
    """Conjugate form of the rescaled bound, for the gap f(x_k) - f_bar.

    Uses (R (f - f_bar))*(z) = R (f*(z/R) + f_bar); an infinite R (a theta = 1
    step after the first) or infinite f* makes the bound vacuous (+inf).
    """
    if state.k < 1:
        raise ValueError("state holds no completed step")
    if math.isinf(state.R):
        return INF
    z = state.z
    fz = fstar(z / state.R)
    if math.isinf(fz):
        return INF
    scaled = state.R * (fz + f_bar)
    return -scaled + inner(z, np.asarray(x0, dtype=float)) - norm_sq(z) / (2.0 * state.mu)


def rhs_distance(s: float, x_ref, f_ref: float, x0) -> float:
    """f_ref + ||x_ref - x_0||^2 / (2 s); the universal distance form."""
    if not s > 0:
        raise ValueError("weight sum must be positive")
    if math.isinf(f_ref):
        return INF
    x_ref = np.asarray(x_ref, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    return f_ref + norm_sq(x_ref - x0) / (2.0 * s)


def rate_prox_grad(L: float, dist: float, k: int) -> float:
    """L dist^2 / (2k): unit-momentum rate with steps t >= 1/L."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not L > 0 or dist < 0:
        raise ValueError("need L > 0 and dist >= 0")
    return L * dist * dist / (2.0 * k)


def rate_accel(L: float, dist: float, k: int) -> float:
    """2 L dist^2 / (k+1)^2: accelerated rate with steps t >= 1/L."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not L > 0 or dist < 0:
        raise ValueError("need L > 0 and dist >= 0")
    return 2.0 * L * dist * dist / ((k + 1.0) * (k + 1.0))


def scaled_distance_bound(theta_prev: float, t_prev: float, dist: float) -> float:
    """theta_{k-1}^2 dist^2 / (2 t_{k-1}): final distance form of the
    rescaled certificate."""
    if not t_prev > 0 or not 0.0 < theta_prev <= 1.0 or dist < 0:
        raise ValueError("need t_prev > 0, theta_prev in (0, 1], dist >= 0")
    return theta_prev * theta_prev * dist * dist / (2.0 * t_prev)


# ---------------------------------------------------------------------------
# Reports.

@dataclass
class BoundRow:
    """One verified index: lhs against each named right-hand side."""

    k: int
    lhs: float
    bounds: dict[str, float]
    slack: float
    satisfied: bool
    vacuous: bool = False
    extras: dict[str, float] = field(default_factory=dict)


@dataclass
class BoundReport:
    """Outcome of one check across a whole trace."""

    name: str
    hypothesis: list[str]
    rows: list[BoundRow]
    notes: list[str] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)

    @property
    def worst(self) -> tuple[int | None, float]:
        """(k, slack) of the tightest non-vacuous row; (None, inf) if none."""
        finite = [r for r in self.rows if not math.isinf(r.slack)]
        if not finite:
            return None, INF
        r = min(finite, key=lambda row: row.slack)
        return r.k, r.slack

    def summary(self) -> dict:
        k, slack = self.worst
        return {
            "name": self.name,
            "satisfied": self.satisfied,
            "worst_slack": None if math.isinf(slack) else slack,
            "worst_k": k,
            "rows": len(self.rows),
            "hypothesis": list(self.hypothesis),
            "notes": list(self.notes),
        }


def _chain_row(
    k: int,
    lhs: float,
    rhs_conj: float | None,
    rhs_dist: float | None,
    atol: float,
    rtol: float,
    extras: dict | None = None,
) -> BoundRow:
    """Assemble one row of an lhs <= conjugate <= distance chain."""
    bounds: dict[str, float] = {}
    legs: list[tuple[float, float]] = []  # (lhs_of_leg, rhs_of_leg)
    if rhs_conj is not None:
        bounds["conjugate"] = rhs_conj
        legs.append((lhs, rhs_conj))
        if rhs_dist is not None:
            bounds["distance"] = rhs_dist
            legs.append((rhs_conj, rhs_dist))
    elif rhs_dist is not None:
        bounds["distance"] = rhs_dist
        legs.append((lhs, rhs_dist))
    satisfied = True
    vacuous = False
    slack = INF
    for a, b in legs:
        if math.isinf(b):
            vacuous = True
            continue
        if math.isinf(a):
            # a vacuous smaller side can never certify the next leg
            vacuous = True
            continue
        satisfied = satisfied and (a <= b + bound_tol(b, atol, rtol))
        slack = min(slack, b - a)
    return BoundRow(
        k=k,
        lhs=lhs,
        bounds=bounds,
        slack=slack,
        satisfied=satisfied,
        vacuous=vacuous,
        extras=extras or {},
    )


def averaged_chain_report(
    trace: Trace,
    x0,
    mode: str,
    fstar: ConjugateOracle | None = None,
    refs: Sequence[tuple[np.ndarray, float]] = (),
    atol: float = BOUND_ATOL,
    rtol: float = BOUND_RTOL,
) -> BoundReport:
    """Verify the averaged-dual chain LHS_k <= conjugate rhs <= distance rhs.

    ``refs`` holds (x_ref, f(x_ref)) pairs for the distance form; the minimum
    over them is the binding one. Raises HypothesisViolation when the trace's
    schedule does not satisfy the mode's requirements.
    """
    x0 = np.asarray(x0, dtype=float)
    state = AveragedDualState(mode=mode)
    rows: list[BoundRow] = []
    for rec in trace.records:
        state.update(rec.t, rec.theta, rec.g, rec.f_x_next)
        rhs_conj = conjugate_bound(state.s, state.z, fstar, x0) if fstar else None
        rhs_dist = None
        if refs:
            rhs_dist = min(rhs_distance(state.s, xr, fr, x0) for xr, fr in refs)
        rows.append(
            _chain_row(state.k, state.lhs, rhs_conj, rhs_dist, atol, rtol,
                       extras={"S_k": state.s, "z_norm": math.sqrt(norm_sq(state.z))})
        )
    hyp = [f"mode={mode}", f"theta={trace.theta_kind}", f"steps={trace.step_kind}"]
    if fstar is not None:
        hyp.append(f"fstar={fstar.kind}")
    return BoundReport(name=f"averaged-{mode}", hypothesis=hyp, rows=rows)


def scaled_chain_report(
    trace: Trace,
    x0,
    dist: float,
    f_bar: float,
    fstar: ConjugateOracle | None = None,
    atol: float = BOUND_ATOL,
    rtol: float = BOUND_RTOL,
) -> BoundReport:
    """Verify the rescaled certificate on a non-increasing-step run.

    Checks, at every k: the schedule hypotheses (delegated to the state,
    which raises on violation), R_k monotone nondecreasing, and the gap
    f(x_k) - f_bar against the schedule distance bound
    theta_{k-1}^2 dist^2/(2 t_{k-1}). With a conjugate oracle the rescaled
    conjugate bound is checked as well.
    """
    x0 = np.asarray(x0, dtype=float)
    state = ScaledDualState()
    rows: list[BoundRow] = []
    r_prev = 0.0
    notes: list[str] = []
    for rec in trace.records:
        state.update(rec.t, rec.theta, rec.g)
        lhs = rec.f_x_next - f_bar
        bounds = {"schedule_distance": scaled_distance_bound(state.theta_prev, state.t_prev, dist)}
        if fstar is not None:
            bounds["scaled_conjugate"] = scaled_conjugate_bound(state, fstar, f_bar, x0)
        satisfied = True
        vacuous = False
        slack = INF
        for rhs in bounds.values():
            if math.isinf(rhs):
                vacuous = True
                continue
            satisfied = satisfied and (lhs <= rhs + bound_tol(rhs, atol, rtol))
            slack = min(slack, rhs - lhs)
        if math.isfinite(state.R):
            if state.R < r_prev * (1.0 - _EXACT_TOL):
                satisfied = False
                notes.append(f"R decreased at k={state.k}: {state.R!r} < {r_prev!r}")
            r_prev = state.R
        extras = {"R": state.R, "mu": state.mu}
        if state.k > 1:
            extras["rho"] = state.rho
        rows.append(BoundRow(k=state.k, lhs=lhs, bounds=bounds, slack=slack,
                             satisfied=satisfied, vacuous=vacuous, extras=extras))
    hyp = [f"theta={trace.theta_kind}", f"steps={trace.step_kind}", "t=non-increasing"]
    return BoundReport(name="scaled", hypothesis=hyp, rows=rows, notes=notes)


def subgradient_chain_report(
    trace: Trace,
    x0,
    fstar: ConjugateOracle | None = None,
    refs: Sequence[tuple[np.ndarray, float]] = (),
    atol: float = BOUND_ATOL,
    rtol: float = BOUND_RTOL,
) -> BoundReport:
    """Verify the subgradient-loop chain at every k (sums include i = 0..k).

    LHS_k = [sum t_i (phi(x_i) + psi(x_{i+1})) - (1/2) sum t_i^2 ||g_phi_i||^2]
            / sum t_i, checked against the conjugate rhs with weight sum t_i
    and against the distance form at each reference point.
    """
    x0 = np.asarray(x0, dtype=float)
    t_sum = 0.0
    val_sum = 0.0
    sq_sum = 0.0
    g_sum = np.zeros_like(x0)
    rows: list[BoundRow] = []
    for rec in trace.records:
        t_sum += rec.t
        val_sum += rec.t * (rec.phi_y + rec.psi_x_next)
        sq_sum += rec.t * rec.t * norm_sq(rec.g_phi)
        g_sum = g_sum + rec.t * rec.g
        z = g_sum / t_sum
        lhs = (val_sum - 0.5 * sq_sum) / t_sum
        rhs_conj = None
        if fstar is not None:
            fz = fstar(z)
            rhs_conj = (
                INF
                if math.isinf(fz)
                else -fz + inner(z, x0) - 0.5 * t_sum * norm_sq(z)
            )
        rhs_dist = None
        if refs:
            rhs_dist = min(rhs_distance(t_sum, xr, fr, x0) for xr, fr in refs)
        rows.append(_chain_row(rec.k, lhs, rhs_conj, rhs_dist, atol, rtol,
                               extras={"t_sum": t_sum}))
    hyp = [f"algorithm={trace.algorithm}", f"steps={trace.step_kind}"]
    if fstar is not None:
        hyp.append(f"fstar={fstar.kind}")
    return BoundReport(name="subgradient-chain", hypothesis=hyp, rows=rows)


def classic_subgradient_bounds(
    trace: Trace,
    phi_bar: float,
    dist: float,
    L_bound: float | None = None,
    ks: Sequence[int] | None = None,
    atol: float = BOUND_ATOL,
    rtol: float = BOUND_RTOL,
) -> BoundReport:
    """Best-iterate bounds for the subgradient loop.

    At each requested k: min_{i<=k} phi(x_i) - phi_bar against
    (L^2 sum t_i^2 + dist^2)/(2 sum t_i), and, in normalized quantities
    alpha_i = t_i ||g_phi_i||, against L (sum alpha_i^2 + dist^2)/(2 sum alpha_i).
    A zero subgradient along the way means some iterate was already optimal;
    the normalized form is then skipped and noted.
    """
    if L_bound is not None and not L_bound > 0:
        raise ValueError("L_bound must be positive")
    recs = trace.records
    if ks is None:
        ks = range(len(recs))
    ks = sorted(set(int(k) for k in ks))
    if ks and (ks[0] < 0 or ks[-1] >= len(recs)):
        raise ValueError("requested k outside the trace")
    notes: list[str] = []
    rows: list[BoundRow] = []
    best = INF
    t_sum = 0.0
    t2_sum = 0.0
    a_sum = 0.0
    a2_sum = 0.0
    zero_g = False
    want = set(ks)
    for i, rec in enumerate(recs):
        best = min(best, rec.phi_y)
        t_sum += rec.t
        t2_sum += rec.t * rec.t
        a = rec.t * math.sqrt(norm_sq(rec.g_phi))
        if a == 0.0:
            zero_g = True
        a_sum += a
        a2_sum += a * a
        if i not in want:
            continue
        lhs = best - phi_bar
        bounds: dict[str, float] = {}
        if L_bound is not None:
            bounds["lipschitz_form"] = (
                L_bound * L_bound * t2_sum + dist * dist
            ) / (2.0 * t_sum)
            if zero_g:
                notes.append(
                    f"zero subgradient before k={i}: iterate already optimal, "
                    "normalized form skipped"
                )
            else:
                bounds["normalized_form"] = (
                    L_bound * (a2_sum + dist * dist) / (2.0 * a_sum)
                )
        satisfied = True
        slack = INF
        for rhs in bounds.values():
            satisfied = satisfied and (lhs <= rhs + bound_tol(rhs, atol, rtol))
            slack = min(slack, rhs - lhs)
        rows.append(BoundRow(k=i, lhs=lhs, bounds=bounds, slack=slack,
                             satisfied=satisfied))
    return BoundReport(
        name="subgradient-best-iterate",
        hypothesis=[f"L_bound={L_bound}", f"steps={trace.step_kind}"],
        rows=rows,
        notes=notes,
    )


def anchor_report(trace: Trace, x0, tol: float = ANCHOR_TOL) -> BoundReport:
    """Structural identity of the momentum template, checked per component:

    (y_k - (1 - theta_k) x_k) / theta_k  ==  x_0 - sum_{i<k} (t_i/theta_i) g_i
    """
    x0 = np.asarray(x0, dtype=float)
    w = np.zeros_like(x0)
    rows: list[BoundRow] = []
    for rec in trace.records:
        if rec.k >= 1:
            lhs_vec = (rec.y - (1.0 - rec.theta) * rec.x) / rec.theta
            resid = float(np.max(np.abs(lhs_vec - (x0 - w))))
            rows.append(
                BoundRow(
                    k=rec.k,
                    lhs=resid,
                    bounds={"tolerance": tol},
                    slack=tol - resid,
                    satisfied=resid <= tol,
                )
            )
        w = w + (rec.t / rec.theta) * rec.g
    return BoundReport(
        name="anchor-identity",
        hypothesis=[f"theta={trace.theta_kind}", f"steps={trace.step_kind}"],
        rows=rows,
    )


def rate_report(
    trace: Trace,
    f_bar: float,
    dist: float,
    L: float | None = None,
    variant: str = "auto",
    atol: float = BOUND_ATOL,
    rtol: float = BOUND_RTOL,
) -> BoundReport:
    """Check f(x_k) - f_bar against the applicable worst-case rate at each k.

    The running-sum form dist^2/(2 S_k), S_k = sum_{i<k} t_i/theta_i, is
    always checked; with L given, the classic L dist^2/(2k) (unit momentum)
    or 2 L dist^2/(k+1)^2 (accelerated) form is added according to
    ``variant`` ("basic", "accel", or "auto" to pick from the schedule).
    """
    if variant == "auto":
        variant = "basic" if trace.theta_kind == "constant_one" else "accel"
    if variant not in ("basic", "accel"):
        raise ValueError(f"unknown rate variant {variant!r}")
    rows: list[BoundRow] = []
    s = 0.0
    for rec in trace.records:
        s += rec.t / rec.theta
        k = rec.k + 1
        lhs = rec.f_x_next - f_bar
        bounds = {"sum_form": dist * dist / (2.0 * s)}
        if L is not None:
            bounds["classic"] = (
                rate_prox_grad(L, dist, k) if variant == "basic" else rate_accel(L, dist, k)
            )
        satisfied = True
        slack = INF
        for rhs in bounds.values():
            satisfied = satisfied and (lhs <= rhs + bound_tol(rhs, atol, rtol))
            slack = min(slack, rhs - lhs)
        rows.append(BoundRow(k=k, lhs=lhs, bounds=bounds, slack=slack, satisfied=satisfied))
    return BoundReport(
        name=f"rate-{variant}",
        hypothesis=[f"theta={trace.theta_kind}", f"steps={trace.step_kind}", f"L={L}"],
        rows=rows,
    )


def steep_bound(
    steepness: Callable[[float], float],
    alphas: Sequence[float],
    dist: float,
    t_max: float = 1e9,
    samples: int = 1000,
) -> float:
    """Level bound sup{ t in [0, t_max] : t / steepness(t) <= B } with
    B = (sum alpha_i^2 + dist^2) / (2 sum alpha_i).

    The ratio t/steepness(t) is sampled to decide whether it is nondecreasing;
    if so the crossing is found by bisection, otherwise a fine linear scan
    (resolution t_max/1e6) takes over. A nondecreasing ratio still growing at
    t_max with its crossing outside the window is an error asking for a larger
    t_max; a ratio plateaued at or below B (steepness growing at least
    linearly) returns the capped value t_max.
    """
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0 or np.any(a <= 0.0):
        raise ValueError("alphas must be a nonempty positive sequence")
    if dist < 0 or not t_max > 0 or samples < 16:
        raise ValueError("need dist >= 0, t_max > 0, samples >= 16")
    B = (float(np.sum(a * a)) + dist * dist) / (2.0 * float(np.sum(a)))

    def ratio(t: float) -> float:
        if t == 0.0:
            return 0.0
        s = float(steepness(t))
        if not s > 0:
            raise ValueError(f"steepness must be positive for t > 0, got {s} at t={t}")
        return t / s

    ts = np.linspace(t_max / samples, t_max, samples)
    rs = np.array([ratio(t) for t in ts])
    steps = np.diff(rs)
    nondecreasing = bool(np.all(steps >= -1e-12 * np.maximum(1.0, np.abs(rs[:-1]))))

    if not nondecreasing:
        # non-monotone ratio: fall back to a fine scan of the window
        fine = np.linspace(t_max / 1e6, t_max, int(1e6))
        ok = np.array([ratio(t) <= B for t in fine])
        if not ok.any():
            return 0.0
        return float(fine[np.flatnonzero(ok)[-1]])

    if rs[-1] <= B:
        growing = rs[-1] > rs[-2] + 1e-12 * max(1.0, abs(rs[-1]))
        if growing:
            raise ValueError(
                f"level set still open at t_max={t_max!r} (ratio {rs[-1]!r} <= B={B!r}); "
                "re-run with a larger t_max"
            )
        return float(t_max)
    if ratio(ts[0]) > B and B < ts[0]:
        # the whole sampled window is above the level; sup may still be in
        # (0, ts[0]) so bisect from zero anyway
        pass
    lo, hi = 0.0, float(t_max)
    # invariant: ratio(lo) <= B < ratio(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if ratio(mid) <= B:
            lo = mid
        else:
            hi = mid
    return lo
