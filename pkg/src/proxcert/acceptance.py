"""Executable acceptance matrix.

Each criterion re-derives one shipped claim end to end on the built-in
instances and reports pass or fail with a one-line detail. This is what
``proxcert verify-all`` runs and what tests/test_acceptance.py asserts,
criterion by criterion, at the stated tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .certificates import (
    AveragedDualState,
    ScaledDualState,
    anchor_report,
    bound_tol,
    rate_accel,
    rate_report,
    scaled_chain_report,
    classic_subgradient_bounds,
    averaged_chain_report,
    subgradient_chain_report,
    steep_bound,
)
from .core import fenchel_young_gap, norm
from .prox import (
    GridSpec,
    ProxSpec,
    conjugate_l1,
    conjugate_quadratic,
    make_prox_oracle,
    make_psi_conjugate,
    support_box,
)
from .problems import brute_force_prox, get_problem, reference_points
from .report import fit_loglog_slope
from .schedules import ThetaSchedule, backtracking_step, fixed_step
from .solvers import run_algorithm1, run_algorithm2

__all__ = ["CriterionResult", "run_all", "REGRESSION_BASELINE"]

# Tail-half log-log exponents of criterion 12, measured once on the frozen
# default seeds and kept as a regression baseline (tolerance 0.2 on re-runs).
# Tail-half log-log slopes of the gap curves on lasso-20 at the frozen
# registry seed; re-runs must stay within BASELINE_TOL of these.
REGRESSION_BASELINE: dict[str, float | None] = {"basic": -1.303, "accel": -3.969}
BASELINE_TOL = 0.2


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


class _Suite:
    """Shared state across criteria: instances, reference draws, and the
    momentum traces that the anchor criterion sweeps afterwards."""

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self.rng = np.random.default_rng(20240817)
        self.momentum_traces: list[tuple[str, object]] = []
        self.l1_trace = None
        self.l1_inst = None

    def problem(self, name: str):
        return get_problem(name, seed=self.seed)

    def remember(self, label: str, trace) -> None:
        self.momentum_traces.append((label, trace))


def _gap_check(trace, inst, bound_fn) -> tuple[bool, float, int]:
    """f(x_k) - f_bar <= bound_fn(k) + tol for every k; returns worst slack."""
    ok = True
    worst = math.inf
    worst_k = -1
    for rec in trace.records:
        k = rec.k + 1
        gap = rec.f_x_next - inst.f_bar
        rhs = bound_fn(k, rec)
        slack = rhs - gap
        if slack < worst:
            worst, worst_k = slack, k
        if gap > rhs + bound_tol(rhs):
            ok = False
    return ok, worst, worst_k


# ---------------------------------------------------------------------------

def _criterion_1(suite: _Suite) -> CriterionResult:
    details = []
    passed = True
    for name in ("boxqp-10", "lasso-20"):
        inst = suite.problem(name)
        t0 = time.perf_counter()
        trace = run_algorithm1(inst.objective, ThetaSchedule("constant_one"),
                               fixed_step(1.0 / inst.L), inst.x0, 1000)
        elapsed = time.perf_counter() - t0
        suite.remember(f"c1-{name}", trace)
        ok, worst, worst_k = _gap_check(
            trace, inst, lambda k, rec: inst.L * inst.dist_x0 ** 2 / (2.0 * k))
        passed = passed and ok and elapsed < 1.0
        details.append(f"{inst.name}: worst_slack={worst:.2e}@k={worst_k}, {elapsed:.2f}s")
    return CriterionResult(1, "unit-momentum rate bound", passed, "; ".join(details))


def _criterion_2(suite: _Suite) -> CriterionResult:
    details = []
    passed = True
    for name in ("boxqp-10", "lasso-20"):
        inst = suite.problem(name)
        t0 = time.perf_counter()
        trace = run_algorithm1(inst.objective, ThetaSchedule("fista"),
                               fixed_step(1.0 / inst.L), inst.x0, 1000)
        elapsed = time.perf_counter() - t0
        suite.remember(f"c2-{name}", trace)
        ok, worst, worst_k = _gap_check(
            trace, inst, lambda k, rec: rate_accel(inst.L, inst.dist_x0, k))
        passed = passed and ok and elapsed < 1.0
        details.append(f"{inst.name}: worst_slack={worst:.2e}@k={worst_k}, {elapsed:.2f}s")
    return CriterionResult(2, "accelerated rate bound", passed, "; ".join(details))


def _criterion_3(suite: _Suite) -> CriterionResult:
    L = 2.5
    t = 1.0 / L
    sched = ThetaSchedule("fista")
    s = 0.0
    worst_rel = 0.0
    lower_ok = True
    for k in range(1, 10_001):
        theta_prev = sched.current
        s += t / theta_prev
        closed = t / (theta_prev * theta_prev)
        worst_rel = max(worst_rel, abs(s - closed) / closed)
        if s < (k + 1) ** 2 / (4.0 * L):
            lower_ok = False
        sched.advance()
    passed = worst_rel <= 1e-9 and lower_ok
    return CriterionResult(
        3, "weight-sum closed form",
        passed, f"max rel err={worst_rel:.2e} over k<=1e4, lower bound {'held' if lower_ok else 'FAILED'}")


def _criterion_4(suite: _Suite) -> CriterionResult:
    worst = math.inf
    n_runs = 0
    passed = True
    for label, trace in suite.momentum_traces:
        if trace.algorithm not in ("prox_grad", "accel_prox_grad"):
            continue
        rep = anchor_report(trace, trace.x0)
        rows = [r for r in rep.rows if r.k <= 1000]
        if rows:
            worst = min(worst, min(r.slack for r in rows))
            if not all(r.satisfied for r in rows):
                passed = False
        n_runs += 1
    detail = f"{n_runs} momentum runs, min residual margin={worst:.2e} (tol 1e-8)"
    return CriterionResult(4, "anchor identity on every run", passed, detail)


def _criterion_5(suite: _Suite) -> CriterionResult:
    worst_slack = math.inf
    worst_label = ""
    n_chains = 0
    fails = []
    for name in ("quad-1d", "quad-2d", "lasso-2d", "boxqp-2d"):
        inst = suite.problem(name)
        refs = reference_points(inst, 10, suite.rng)
        for mode, theta_kind in (("ergodic", "constant_one"), ("last", "fista")):
            trace = run_algorithm1(inst.objective, ThetaSchedule(theta_kind),
                                   fixed_step(1.0 / inst.L), inst.x0, 500)
            suite.remember(f"c5-{name}-{mode}", trace)
            rep = averaged_chain_report(trace, trace.x0, mode,
                                        fstar=inst.fstar, refs=refs)
            n_chains += 1
            label = f"{name}/{mode}[{inst.fstar_strategy}]"
            _, worst = rep.worst
            if worst < worst_slack:
                worst_slack, worst_label = worst, label
            if not rep.satisfied:
                fails.append(label)
    detail = f"{n_chains} chains, 10 refs each, worst_slack={worst_slack:.2e} at {worst_label}"
    if fails:
        detail += "; FAIL: " + ", ".join(fails)
    return CriterionResult(5, "averaged-dual chain", not fails, detail)


def _criterion_6(suite: _Suite) -> CriterionResult:
    inst = suite.problem("lasso-20")
    passed = True
    details = []
    for theta_kind in ("fista", "two_over_kplus2"):
        rule = backtracking_step(t_init=10.0 / inst.L, beta=0.5, monotone=True)
        trace = run_algorithm1(inst.objective, ThetaSchedule(theta_kind), rule,
                               inst.x0, 1000)
        suite.remember(f"c6-{theta_kind}", trace)
        rep = scaled_chain_report(trace, trace.x0, inst.dist_x0, inst.f_bar)
        rhos = [r.extras["rho"] for r in rep.rows if "rho" in r.extras]
        rho_ok = all(r >= 1.0 - 1e-12 for r in rhos)
        rs = [r.extras["R"] for r in rep.rows if "R" in r.extras]
        r_ok = all(b >= a * (1.0 - 1e-12) for a, b in zip(rs, rs[1:]))
        min_t = min(rec.t for rec in trace.records)
        L_eff = 1.0 / min_t
        eff_ok, eff_worst, _ = _gap_check(
            trace, inst, lambda k, rec: rate_accel(L_eff, inst.dist_x0, k))
        ok = rep.satisfied and rho_ok and r_ok and eff_ok
        passed = passed and ok
        _, worst = rep.worst
        details.append(
            f"{theta_kind}: {'ok' if ok else 'FAIL'} dist_slack={worst:.1e} "
            f"min_rho={min(rhos):.6f} L_eff_slack={eff_worst:.1e}")
    return CriterionResult(6, "rescaled certificate, monotone backtracking",
                           passed, "; ".join(details))


def _c7_steps(count: int, c: float = 0.5) -> list[float]:
    return [c / math.sqrt(i + 1.0) for i in range(count)]


def _criterion_7(suite: _Suite) -> CriterionResult:
    inst = suite.problem("l1reg-2d")
    trace = run_algorithm2(inst.objective, inst.subgrad, inst.x0, 2000,
                           steps=_c7_steps(2000))
    suite.l1_trace = trace
    suite.l1_inst = inst
    refs = reference_points(inst, 10, suite.rng)
    rep = subgradient_chain_report(trace, trace.x0, fstar=inst.fstar, refs=refs)
    _, worst = rep.worst
    return CriterionResult(
        7, "subgradient dual chain", rep.satisfied,
        f"{inst.name}: K=2000, worst_slack={worst:.2e} [{inst.fstar_strategy}]")


def _criterion_8(suite: _Suite) -> CriterionResult:
    inst, trace = suite.l1_inst, suite.l1_trace
    rep = classic_subgradient_bounds(trace, inst.f_bar, inst.dist_x0,
                                     L_bound=inst.subgrad_bound, ks=(10, 100, 1000))
    _, worst = rep.worst
    return CriterionResult(
        8, "classic subgradient rate forms", rep.satisfied,
        f"k in (10,100,1000), worst_slack={worst:.2e}")


def _criterion_9(suite: _Suite) -> CriterionResult:
    inst, trace = suite.l1_inst, suite.l1_trace
    Lb = inst.subgrad_bound
    d = inst.dist_x0
    alphas = [rec.t * norm(rec.g_phi) for rec in trace.records]
    B = (sum(a * a for a in alphas) + d * d) / (2.0 * sum(alphas))
    got_const = steep_bound(lambda t: Lb, alphas, d, t_max=4.0 * Lb * B)
    rel_const = abs(got_const - Lb * B) / (Lb * B)
    got_sqrt = steep_bound(math.sqrt, alphas, d, t_max=max(4.0 * B * B, 1.0))
    rel_sqrt = abs(got_sqrt - B * B) / max(B * B, 1e-300)
    min_gap = min(rec.phi_y for rec in trace.records) - inst.f_bar
    gap_ok = min_gap <= got_const + bound_tol(got_const)
    passed = rel_const <= 1e-9 and rel_sqrt <= 1e-9 and gap_ok
    return CriterionResult(
        9, "steepness-level bound closed forms", passed,
        f"const rel={rel_const:.1e}, sqrt rel={rel_sqrt:.1e}, "
        f"min_gap={min_gap:.2e} <= {got_const:.2e}")


def _criterion_10(suite: _Suite) -> CriterionResult:
    rng = np.random.default_rng(1894)
    grid = GridSpec(lower=[-3.0, -3.0], upper=[3.0, 3.0], points_per_axis=121)
    h = float(grid.spacing()[0])
    specs = {
        "zero": ProxSpec.zero(),
        "l1": ProxSpec.l1(0.7),
        "sq_l2": ProxSpec.sq_l2(1.3),
        "box": ProxSpec.box([-1.0, -0.5], [0.8, 1.2]),
        "l2_ball": ProxSpec.l2_ball(1.0, [0.0, 0.0]),
    }
    # Grid agreement has to respect what a grid can resolve.  The analytic
    # point must beat every grid candidate on the prox objective, and by
    # 1/t strong convexity its distance to the grid argmin is bounded by
    # sqrt(2t (J_grid - J_analytic)); the (2h)^2 slack keeps the point
    # test at O(h) sensitivity without penalizing curved feasible sets,
    # where the raw argmin separation scales like sqrt(h).
    worst_val = -math.inf
    worst_pt = -math.inf
    prox_ok = True
    for spec in specs.values():
        oracle = make_prox_oracle(spec)
        for _ in range(50):
            x = rng.uniform(-2.0, 2.0, size=2)
            t = rng.uniform(0.1, 2.0)
            got = oracle.prox(t, x)
            ref = brute_force_prox(oracle.value, t, x, grid)

            def j(y):
                return oracle.value(y) + float((x - y) @ (x - y)) / (2.0 * t)

            j_got, j_ref = j(got), j(ref)
            val_excess = j_got - j_ref
            d2 = float((got - ref) @ (got - ref))
            pt_excess = d2 - 2.0 * t * max(j_ref - j_got, 0.0) - (2.0 * h) ** 2
            worst_val = max(worst_val, val_excess)
            worst_pt = max(worst_pt, pt_excess)
            if val_excess > 1e-9 * max(1.0, abs(j_ref)) or pt_excess > 0.0:
                prox_ok = False

    worst_fy = 0.0
    lam, mu = 0.7, 1.3
    lo = np.array([-1.0, -0.5])
    hi = np.array([0.8, 1.2])
    c = np.array([0.3, -0.2])
    r = 1.7
    Q = np.array([[3.0, 1.0], [1.0, 2.0]])
    b = np.array([0.5, -1.0])
    ball_spec = ProxSpec.l2_ball(r, c)
    ball = make_prox_oracle(ball_spec)
    ball_conj = make_psi_conjugate(ball_spec)
    box_oracle = make_prox_oracle(ProxSpec.box(lo, hi))
    for _ in range(50):
        x = rng.uniform(0.2, 2.0, size=2) * rng.choice([-1.0, 1.0], size=2)
        z = rng.uniform(0.2, 2.0, size=2) * rng.choice([-1.0, 1.0], size=2)
        pairs = [
            # h(x), h*(z), subgradient pair (z_at_x, x)
            (lambda v: lam * float(np.sum(np.abs(v))),
             lambda w: conjugate_l1(lam, w), lam * np.sign(x), x),
            (lambda v: 0.5 * mu * float(v @ v),
             lambda w: float(w @ w) / (2.0 * mu), mu * x, x),
            (box_oracle.value, lambda w: support_box(lo, hi, w),
             z, np.where(z > 0, hi, lo)),
            (ball.value, ball_conj, z, c + r * z / norm(z)),
            (lambda v: 0.5 * float(v @ (Q @ v)) - float(b @ v),
             lambda w: conjugate_quadratic(Q, b, 0.0, w), Q @ x - b, x),
        ]
        for h_val, conj_val, zz, xx in pairs:
            worst_fy = max(worst_fy, abs(fenchel_young_gap(h_val, conj_val, zz, xx)))
    fy_ok = worst_fy <= 1e-8
    return CriterionResult(
        10, "prox and conjugate oracle agreement", prox_ok and fy_ok,
        f"value excess={worst_val:.1e}, point excess={worst_pt:.1e}, "
        f"max FY gap={worst_fy:.1e}")


def _criterion_11(suite: _Suite) -> CriterionResult:
    inst = suite.problem("quad-2d")
    trace = run_algorithm1(inst.objective, ThetaSchedule("fista"),
                           fixed_step(1.0 / inst.L), inst.x0, 300)
    suite.remember("c11", trace)
    avg = AveragedDualState("last")
    sc = ScaledDualState()
    worst_z = 0.0
    worst_r = 0.0
    for rec in trace.records:
        avg.update(rec.t, rec.theta, rec.g, rec.f_x_next)
        sc.update(rec.t, rec.theta, rec.g)
        scale = max(1.0, float(np.max(np.abs(sc.z))))
        worst_z = max(worst_z, float(np.max(np.abs(avg.z - sc.z))) / scale)
        worst_r = max(worst_r, abs(sc.R - 1.0))
    passed = worst_z <= 1e-10 and worst_r <= 1e-12
    return CriterionResult(
        11, "averaged and rescaled duals coincide at fixed step", passed,
        f"max z diff={worst_z:.1e}, max |R-1|={worst_r:.1e}")


def _criterion_12(suite: _Suite) -> CriterionResult:
    # The baseline is recorded at the registry's frozen seed, so this
    # criterion ignores the suite seed on purpose.
    inst = get_problem("lasso-20")
    K = 1000
    step = fixed_step(1.0 / inst.L)
    floor = max(1e-13, 10.0 * inst.f_bar_accuracy)
    slopes = {}
    for label, kind in (("basic", "constant_one"), ("accel", "fista")):
        trace = run_algorithm1(inst.objective, ThetaSchedule(kind), step, inst.x0, K)
        ks = [rec.k + 1 for rec in trace.records]
        gaps = [rec.f_x_next - inst.f_bar for rec in trace.records]
        slopes[label] = fit_loglog_slope(ks, gaps, k_min=K // 2, floor=floor)
    ok = slopes["accel"] <= -1.5 and -1.6 <= slopes["basic"] <= -0.7
    drift_notes = []
    for label, slope in slopes.items():
        base = REGRESSION_BASELINE.get(label)
        if base is not None:
            if abs(slope - base) > BASELINE_TOL:
                ok = False
                drift_notes.append(f"{label} drifted from baseline {base:+.3f}")
    detail = (f"accel={slopes['accel']:+.3f} (<=-1.5), "
              f"basic={slopes['basic']:+.3f} (in [-1.6,-0.7])")
    if drift_notes:
        detail += "; " + "; ".join(drift_notes)
    return CriterionResult(12, "acceleration regression baseline", ok, detail)


# ---------------------------------------------------------------------------

_CRITERIA = [
    _criterion_1,
    _criterion_2,
    _criterion_3,
    _criterion_5,
    _criterion_6,
    _criterion_7,
    _criterion_8,
    _criterion_9,
    _criterion_10,
    _criterion_11,
    _criterion_12,
    _criterion_4,  # sweeps the traces the others produced
]


def run_all(seed: int | None = None) -> list[CriterionResult]:
    suite = _Suite(seed=seed)
    results = []
    for fn in _CRITERIA:
        t0 = time.perf_counter()
        res = fn(suite)
        res.seconds = time.perf_counter() - t0
        results.append(res)
    results.sort(key=lambda r: r.cid)
    return results
