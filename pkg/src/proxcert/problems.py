"""Desk-scale benchmark instances with certified optima and conjugate oracles.

Each builder returns a ProblemInstance carrying the composite objective, a
certified optimal value f_bar with an explicit accuracy, the distance from
the supplied start to the solution set, a curvature constant where one
exists, and a conjugate oracle for f chosen by a small strategy ladder:
closed form when psi vanishes, an exact inner minimization for
quadratic-plus-l1 (KKT pattern enumeration at low dimension, an active-set
bounded least squares solve above that), and a grid maximum (lower
estimate, conservative for certificate checking) otherwise.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import lsq_linear

from .core import (
    CompositeObjective,
    ConjugateOracle,
    SmoothOracle,
    as_vector,
    norm,
)
from .prox import (
    GridSpec,
    ProxSpec,
    make_grid_conjugate,
    make_prox_oracle,
    make_psi_conjugate,
    project_box,
)
from .schedules import ThetaSchedule, fixed_step
from .solvers import run_algorithm1

__all__ = [
    "ProblemInstance",
    "make_least_squares",
    "make_lasso",
    "make_box_qp",
    "make_l1_regression",
    "reference_optimum",
    "brute_force_prox",
    "reference_points",
    "get_problem",
    "builtin_names",
    "save_problem",
    "load_problem",
    "SEED_ENV_VAR",
]

SEED_ENV_VAR = "PROXCERT_SEED"

DUAL_SOLVE_MAX_DIM = 8
GRID_CONJ_POINTS = 301


@dataclass
class ProblemInstance:
    """A benchmark problem with certified reference quantities.

    f_bar is never above the true optimum by more than f_bar_accuracy, and
    never below it (it is the value of a feasible point). dist_x0 is the
    distance from x0 to the solution set, or a documented upper estimate
    when the solution set is not a single certified point.
    """

    name: str
    kind: str
    objective: CompositeObjective
    x0: np.ndarray
    L: float | None
    f_bar: float
    f_bar_accuracy: float
    dist_x0: float
    dist_accuracy: float
    x_bar: np.ndarray | None
    fstar_strategy: str  # analytic | dual-solve | numeric-grid | unavailable
    smooth: bool
    data: dict
    seed: int | None = None
    subgrad: Callable[[np.ndarray], np.ndarray] | None = None
    subgrad_bound: float | None = None

    @property
    def fstar(self) -> ConjugateOracle | None:
        return self.objective.f_conj

    @property
    def dim(self) -> int:
        return self.objective.dim


# ---------------------------------------------------------------------------
# Smooth oracles and curvature estimates.

def _least_squares_smooth(A: np.ndarray, b: np.ndarray, L: float) -> SmoothOracle:
    def value(x):
        r = A @ np.asarray(x, float) - b
        return 0.5 * float(np.dot(r, r))

    def gradient(x):
        return A.T @ (A @ np.asarray(x, float) - b)

    return SmoothOracle(value=value, gradient=gradient, lipschitz=L)


def _quadratic_smooth(Q: np.ndarray, c: np.ndarray, L: float) -> SmoothOracle:
    def value(x):
        x = np.asarray(x, float)
        return 0.5 * float(x @ (Q @ x)) + float(c @ x)

    def gradient(x):
        return Q @ np.asarray(x, float) + c

    return SmoothOracle(value=value, gradient=gradient, lipschitz=L)


def _power_lipschitz(G: np.ndarray, seed: int = 0, iters: int = 20000, rtol: float = 1e-13) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration,
    inflated by 1e-6 so fixed steps 1/L stay on the safe side."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[0])
    v /= norm(v)
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        nw = norm(w)
        if nw == 0.0:
            return 1e-300  # zero matrix; any step is safe
        v = w / nw
        lam_new = float(v @ (G @ v))
        if abs(lam_new - lam) <= rtol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return lam * (1.0 + 1e-6)


def _quad_conjugate_oracle(Q: np.ndarray, b_lin: np.ndarray, c0: float) -> ConjugateOracle:
    """Analytic conjugate of x'Qx/2 - b_lin'x + c0 with Q prefactored."""
    chol = np.linalg.cholesky(Q)

    def conj(z):
        w = np.asarray(z, float) + b_lin
        y = np.linalg.solve(chol, w)
        return 0.5 * float(np.dot(y, y)) - c0

    return ConjugateOracle(conj_value=conj, kind="analytic")


# ---------------------------------------------------------------------------
# Exact box-constrained quadratic minimization (inner solver of the
# dual-solve conjugate) by KKT pattern enumeration. Dimension is capped: the
# pattern count is 3^n.

def _min_quadratic_over_box(H, r, lo, hi):
    """Exact min of u'Hu/2 + r'u over [lo, hi], H symmetric PD, n <= 8.

    Returns (value, minimizer). Falls back to the best feasible stationary
    candidate (an upper bound on the minimum, conservative for certificate
    use) if rounding leaves no pattern satisfying the KKT sign checks.
    """
    H = np.asarray(H, dtype=float)
    r = np.asarray(r, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = r.size
    if n > DUAL_SOLVE_MAX_DIM:
        raise ValueError(f"KKT enumeration capped at dim {DUAL_SOLVE_MAX_DIM}, got {n}")
    scale = max(1.0, float(np.max(np.abs(r))), float(np.max(np.abs(H))))
    tol = 1e-9 * scale
    best_valid = None
    best_any = None
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        u = np.empty(n)
        free = [i for i, p in enumerate(pattern) if p == 0]
        for i, p in enumerate(pattern):
            if p == -1:
                u[i] = lo[i]
            elif p == 1:
                u[i] = hi[i]
        if free:
            idx = np.array(free)
            clamped = np.array([i for i in range(n) if pattern[i] != 0], dtype=int)
            rhs = -r[idx]
            if clamped.size:
                rhs = rhs - H[np.ix_(idx, clamped)] @ u[clamped]
            try:
                u[idx] = np.linalg.solve(H[np.ix_(idx, idx)], rhs)
            except np.linalg.LinAlgError:
                continue
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            continue
        u = np.clip(u, lo, hi)
        g = H @ u + r
        val = 0.5 * float(u @ (H @ u)) + float(r @ u)
        if best_any is None or val < best_any[0]:
            best_any = (val, u)
        ok = True
        for i, p in enumerate(pattern):
            if p == 0 and abs(g[i]) > tol:
                ok = False
            elif p == -1 and g[i] < -tol:
                ok = False
            elif p == 1 and g[i] > tol:
                ok = False
        if ok and (best_valid is None or val < best_valid[0]):
            best_valid = (val, u)
    if best_valid is not None:
        return best_valid
    if best_any is not None:
        return best_any
    raise ArithmeticError("box-QP enumeration produced no feasible candidate")


def _polish_box_pattern(M, lo, hi, w, tol: float = 1e-9):
    """Re-solve the active-set pattern w suggests for min w'Mw/2 over
    [lo, hi]; returns a feasible polished point, or None when the pattern
    fails the KKT sign checks."""
    scale = 1.0 + float(np.max(np.abs(w), initial=0.0))
    at_lo = w - lo <= tol * scale
    at_hi = hi - w <= tol * scale
    free = ~(at_lo | at_hi)
    out = np.where(at_hi, hi, lo)
    if free.any():
        rhs = -(M[np.ix_(free, ~free)] @ out[~free]) if (~free).any() else 0.0
        try:
            out[free] = np.linalg.solve(M[np.ix_(free, free)],
                                        np.broadcast_to(rhs, (int(free.sum()),)))
        except np.linalg.LinAlgError:
            return None
    g = M @ out
    gtol = tol * (1.0 + float(np.max(np.abs(g), initial=0.0)))
    if free.any() and float(np.max(np.abs(g[free]), initial=0.0)) > gtol:
        return None
    if at_lo.any() and float(np.min(g[at_lo])) < -gtol:
        return None
    if at_hi.any() and float(np.max(g[at_hi])) > gtol:
        return None
    return np.clip(out, lo, hi)


def _lasso_dual_conjugate(A: np.ndarray, b: np.ndarray, lam: float) -> ConjugateOracle:
    """f* for f = 0.5||Ax-b||^2 + lam||x||_1 via the infimal convolution
    f*(z) = min_{||u||_inf <= lam} phi*(z - u), solved exactly per z.

    Low dimensions enumerate KKT patterns. Above the enumeration cap the
    substitution w = z + A'b - u turns the inner problem into
    min ||Gw||^2 over a shifted box with G from the Cholesky factor of
    A'A; bounded-variable least squares finds the active set and the
    pattern is re-solved exactly. Every path returns the value of a
    feasible point, so the estimate never undershoots the true f*.
    """
    Q = A.T @ A
    bl = A.T @ b
    c0 = 0.5 * float(np.dot(b, b))
    n = Q.shape[0]

    if n <= DUAL_SOLVE_MAX_DIM:
        M = np.linalg.inv(Q)
        lo = -lam * np.ones(n)
        hi = lam * np.ones(n)

        def conj(z):
            v = np.asarray(z, float) + bl
            val, _ = _min_quadratic_over_box(M, -(M @ v), lo, hi)
            return val + 0.5 * float(v @ (M @ v)) - c0

        return ConjugateOracle(conj_value=conj, kind="dual-solve")

    C = np.linalg.cholesky(Q)
    G = solve_triangular(C, np.eye(n), lower=True)
    M = G.T @ G  # = inv(Q), via the factor so w'Mw = ||Gw||^2

    def conj(z):
        v = np.asarray(z, float) + bl
        lo = v - lam
        hi = v + lam
        res = lsq_linear(G, np.zeros(n), bounds=(lo, hi), method="bvls",
                         tol=1e-14)
        w = np.clip(res.x, lo, hi)
        best = 0.5 * float(w @ (M @ w))
        polished = _polish_box_pattern(M, lo, hi, w)
        if polished is not None:
            best = min(best, 0.5 * float(polished @ (M @ polished)))
        return best - c0

    return ConjugateOracle(conj_value=conj, kind="dual-solve")


# ---------------------------------------------------------------------------
# Reference optima.

def _accel_run(obj, x0, L, iterations):
    trace = run_algorithm1(obj, ThetaSchedule("fista"), fixed_step(1.0 / L), x0, iterations)
    return trace


def _lasso_polish(A, b, lam, x, margin=1e-7):
    """Support identification plus exact solve; None unless the optimality
    system verifies with strict margins (which also certifies uniqueness)."""
    x = np.asarray(x, dtype=float)
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    support = np.abs(x) > 1e-8 * scale
    x_hat = np.zeros_like(x)
    if support.any():
        As = A[:, support]
        G = As.T @ As
        if np.linalg.cond(G) > 1e12:
            return None
        s = np.sign(x[support])
        xs = np.linalg.solve(G, As.T @ b - lam * s)
        if np.any(np.sign(xs) != s):
            return None
        x_hat[support] = xs
    grad = A.T @ (A @ x_hat - b)
    off = ~support
    if np.any(np.abs(grad[off]) > lam * (1.0 - margin)):
        return None
    if support.any() and np.max(np.abs(grad[support] + lam * np.sign(x_hat[support]))) > 1e-8 * max(
        1.0, lam
    ):
        return None
    r = A @ x_hat - b
    f_bar = 0.5 * float(np.dot(r, r)) + lam * float(np.sum(np.abs(x_hat)))
    return x_hat, f_bar


def reference_optimum(problem: ProblemInstance, budget: int) -> tuple[float, float]:
    """Best objective value found within an iteration budget, with a
    worst-case accuracy estimate.

    Instances already carrying a certified optimum return it directly. A
    smooth instance runs the accelerated loop at the fixed safe step; a
    nonsmooth one runs diminishing-step subgradient iterations. The accuracy
    estimate uses the corresponding worst-case rate with a distance estimate
    taken from the run itself, and is exactly that: an estimate.
    """
    if budget < 10:
        raise ValueError("budget must be at least 10 iterations")
    if problem.x_bar is not None and problem.f_bar_accuracy <= 1e-8:
        return problem.f_bar, problem.f_bar_accuracy
    if problem.smooth:
        if problem.L is None:
            raise ValueError("smooth reference run needs a curvature bound")
        trace = _accel_run(problem.objective, problem.x0, problem.L, budget)
        best = min(r.f_x_next for r in trace.records)
        last = trace.records[-1]
        d_hat = norm(problem.x0 - last.x_next) + 10.0 * norm(last.x_next - last.x)
        from .certificates import rate_accel  # local import avoids a cycle

        return best, rate_accel(problem.L, max(d_hat, 1e-12), budget)
    if problem.subgrad is None or problem.subgrad_bound is None:
        raise ValueError("nonsmooth reference run needs a subgradient oracle and bound")
    lo = problem.data.get("lo")
    hi = problem.data.get("hi")
    diam = (
        norm(np.asarray(hi, float) - np.asarray(lo, float))
        if lo is not None and hi is not None
        else 10.0
    )
    Lb = problem.subgrad_bound
    ts = [diam / (Lb * math.sqrt(i + 1.0)) for i in range(budget)]
    from .solvers import run_algorithm2

    trace = run_algorithm2(problem.objective, problem.subgrad, problem.x0, budget, steps=ts)
    best = min(min(r.phi_y for r in trace.records), trace.records[-1].f_x_next)
    t2 = sum(t * t for t in ts)
    acc = (Lb * Lb * t2 + diam * diam) / (2.0 * sum(ts))
    return best, acc


# ---------------------------------------------------------------------------
# Builders.

def _mat_json(A: np.ndarray) -> dict:
    A = np.asarray(A, dtype=float)
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]), "data": A.ravel().tolist()}


def _mat_from(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=float).reshape(d["rows"], d["cols"])


def make_least_squares(A, b, x0, name: str = "least-squares", seed: int | None = None) -> ProblemInstance:
    """f(x) = 0.5 ||Ax - b||^2 with no nonsmooth term.

    The optimum closest to x0 is computed by SVD (pseudo-inverse), so dist_x0
    is exact even when A is rank deficient; the conjugate oracle exists only
    in the full-column-rank case.
    """
    A = np.asarray(A, dtype=float)
    b = as_vector(b)
    x0 = as_vector(x0)
    m, n = A.shape
    if b.size != m or x0.size != n:
        raise ValueError("shape mismatch between A, b, x0")
    L = _power_lipschitz(A.T @ A, seed=0 if seed is None else seed)
    x_ls, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    y_hat = A @ x_ls
    # minimizer of f closest to x0: project x0 onto {x : Ax = y_hat}
    x_bar = x0 - np.linalg.pinv(A) @ (A @ x0 - y_hat)
    r = A @ x_bar - b
    f_bar = 0.5 * float(np.dot(r, r))
    full_rank = rank == n
    fstar = None
    strategy = "unavailable"
    if full_rank:
        fstar = _quad_conjugate_oracle(A.T @ A, A.T @ b, 0.5 * float(np.dot(b, b)))
        strategy = "analytic"
    psi_spec = ProxSpec.zero()
    obj = CompositeObjective(
        phi=_least_squares_smooth(A, b, L),
        psi=make_prox_oracle(psi_spec),
        dim=n,
        phi_conj=fstar,
        psi_conj=make_psi_conjugate(psi_spec),
        f_conj=fstar,
    )
    data = {"name": name, "kind": "least_squares", "seed": seed,
            "A": _mat_json(A), "b": b.tolist(), "x_0": x0.tolist()}
    return ProblemInstance(
        name=name, kind="least_squares", objective=obj, x0=x0, L=L,
        f_bar=f_bar, f_bar_accuracy=1e-12 * max(1.0, abs(f_bar)),
        dist_x0=norm(x0 - x_bar), dist_accuracy=1e-12,
        x_bar=x_bar, fstar_strategy=strategy, smooth=True, data=data, seed=seed,
    )


def make_lasso(A, b, lam: float, x0, name: str = "lasso", seed: int | None = None) -> ProblemInstance:
    """f(x) = 0.5 ||Ax - b||^2 + lam ||x||_1.

    The reference optimum comes from accelerated iterations followed by a
    support solve whose optimality system is verified with strict margins;
    that certifies both f_bar (to near machine accuracy) and uniqueness of
    the minimizer, hence an exact dist_x0. Full-rank instances also get
    the exact dual-solve conjugate oracle.
    """
    A = np.asarray(A, dtype=float)
    b = as_vector(b)
    x0 = as_vector(x0)
    if not lam > 0:
        raise ValueError("lam must be positive")
    m, n = A.shape
    if b.size != m or x0.size != n:
        raise ValueError("shape mismatch between A, b, x0")
    L = _power_lipschitz(A.T @ A, seed=0 if seed is None else seed)
    psi_spec = ProxSpec.l1(lam)
    full_rank = np.linalg.matrix_rank(A) == n
    fstar = None
    strategy = "unavailable"
    if full_rank:
        fstar = _lasso_dual_conjugate(A, b, lam)
        strategy = "dual-solve"
    phi_conj = (
        _quad_conjugate_oracle(A.T @ A, A.T @ b, 0.5 * float(np.dot(b, b)))
        if full_rank
        else None
    )
    obj = CompositeObjective(
        phi=_least_squares_smooth(A, b, L),
        psi=make_prox_oracle(psi_spec),
        dim=n,
        phi_conj=phi_conj,
        psi_conj=make_psi_conjugate(psi_spec),
        f_conj=fstar,
    )

    x = x0
    x_bar = None
    f_bar = None
    for rounds in (2000, 8000, 30000, 120000):
        trace = _accel_run(obj, x, L, rounds)
        x = trace.records[-1].x_next
        polished = _lasso_polish(A, b, lam, x)
        if polished is not None:
            x_bar, f_bar = polished
            break
    if x_bar is not None:
        f_acc = 1e-11 * max(1.0, abs(f_bar))
        dist = norm(x0 - x_bar)
        dist_acc = 1e-9
    else:
        # no certificate; fall back to the long-run estimate
        trace = _accel_run(obj, x, L, 200000)
        f_bar = min(r.f_x_next for r in trace.records)
        last = trace.records[-1].x_next
        from .certificates import rate_accel

        f_acc = rate_accel(L, norm(x0 - last) + 1.0, 200000)
        dist = norm(x0 - last)
        dist_acc = 1e-3
        x_bar = None
    data = {"name": name, "kind": "lasso", "seed": seed, "A": _mat_json(A),
            "b": b.tolist(), "lambda": lam, "x_0": x0.tolist()}
    return ProblemInstance(
        name=name, kind="lasso", objective=obj, x0=x0, L=L,
        f_bar=f_bar, f_bar_accuracy=f_acc, dist_x0=dist, dist_accuracy=dist_acc,
        x_bar=x_bar, fstar_strategy=strategy, smooth=True, data=data, seed=seed,
    )


def make_box_qp(Q, c, lo, hi, x0, name: str = "box-qp", seed: int | None = None) -> ProblemInstance:
    """f(x) = 0.5 x'Qx + c'x over the box [lo, hi], Q symmetric PD.

    When the unconstrained minimizer -Q^{-1}c lies inside the box it is the
    exact optimum; otherwise active-set polishing of an accelerated run is
    certified through the prox fixed-point residual and strong convexity.
    Two-dimensional instances carry a grid conjugate for f (a lower estimate
    of f*, conservative for bound checking).
    """
    Q = np.asarray(Q, dtype=float)
    c = as_vector(c)
    lo = as_vector(lo)
    hi = as_vector(hi)
    x0 = as_vector(x0)
    n = c.size
    if Q.shape != (n, n) or lo.size != n or hi.size != n or x0.size != n:
        raise ValueError("shape mismatch among Q, c, lo, hi, x0")
    if np.any(lo > hi):
        raise ValueError("box is empty: some lo > hi")
    evals = np.linalg.eigvalsh(Q)
    mu, L = float(evals[0]), float(evals[-1])
    if mu <= 0:
        raise ValueError("Q must be positive definite")
    psi_spec = ProxSpec.box(lo, hi)
    phi = _quadratic_smooth(Q, c, L)
    phi_conj = _quad_conjugate_oracle(Q, -c, 0.0)

    fstar = None
    strategy = "unavailable"
    if n <= 2:
        grid = GridSpec(lower=lo, upper=hi, points_per_axis=GRID_CONJ_POINTS)

        def batch(X):
            return 0.5 * np.einsum("ij,jk,ik->i", X, Q, X) + X @ c

        fstar = make_grid_conjugate(None, grid, batch_values=batch)
        strategy = "numeric-grid"

    obj = CompositeObjective(
        phi=phi,
        psi=make_prox_oracle(psi_spec),
        dim=n,
        phi_conj=phi_conj,
        psi_conj=make_psi_conjugate(psi_spec),
        f_conj=fstar,
    )

    x_unc = np.linalg.solve(Q, -c)
    if np.all(x_unc >= lo) and np.all(x_unc <= hi):
        x_bar = x_unc
        f_acc = 1e-13 * max(1.0, abs(phi.value(x_bar)))
    else:
        x = x0
        x_bar = None
        for rounds in (2000, 8000, 30000):
            trace = _accel_run(obj, x, L, rounds)
            x = trace.records[-1].x_next
            # active-set solve at the current guess
            g = Q @ x + c
            at_lo = x <= lo + 1e-9 * np.maximum(1.0, np.abs(lo))
            at_hi = x >= hi - 1e-9 * np.maximum(1.0, np.abs(hi))
            cand = x.copy()
            cand[at_lo] = lo[at_lo]
            cand[at_hi] = hi[at_hi]
            free = ~(at_lo | at_hi)
            if free.any():
                idx = np.flatnonzero(free)
                fixed = np.flatnonzero(~free)
                rhs = -c[idx]
                if fixed.size:
                    rhs = rhs - Q[np.ix_(idx, fixed)] @ cand[fixed]
                cand[idx] = np.linalg.solve(Q[np.ix_(idx, idx)], rhs)
            cand = project_box(lo, hi, cand)
            # certify through the prox fixed-point residual
            step = project_box(lo, hi, cand - (Q @ cand + c) / L)
            res = norm(cand - step)
            scale = max(1.0, norm(cand))
            if res <= 1e-12 * scale:
                x_bar = cand
                f_acc = max(1e-13, (L * L / mu) * res * res)
                break
        if x_bar is None:
            raise ArithmeticError(f"box-QP reference failed to certify for {name!r}")
    f_bar = float(phi.value(x_bar))
    data = {"name": name, "kind": "box_qp", "seed": seed, "Q": _mat_json(Q),
            "c": c.tolist(), "lo": lo.tolist(), "hi": hi.tolist(), "x_0": x0.tolist()}
    return ProblemInstance(
        name=name, kind="box_qp", objective=obj, x0=x0, L=L,
        f_bar=f_bar, f_bar_accuracy=f_acc,
        dist_x0=norm(x0 - x_bar), dist_accuracy=1e-10,
        x_bar=x_bar, fstar_strategy=strategy, smooth=True, data=data, seed=seed,
    )


def make_l1_regression(A, b, lo, hi, x0, name: str = "l1-regression", seed: int | None = None) -> ProblemInstance:
    """f(x) = ||Ax - b||_1 over the box [lo, hi]; nonsmooth phi.

    phi's "gradient" slot holds the standard subgradient selection
    A' sign(Ax - b) (sign(0) = 0), for the subgradient loop only. The
    reference optimum is solved as a linear program; dist_x0 is an upper
    estimate from the LP vertex since the solution set may be a face.
    """
    A = np.asarray(A, dtype=float)
    b = as_vector(b)
    lo = as_vector(lo)
    hi = as_vector(hi)
    x0 = as_vector(x0)
    m, n = A.shape
    if b.size != m or lo.size != n or hi.size != n or x0.size != n:
        raise ValueError("shape mismatch among A, b, lo, hi, x0")
    if np.any(lo > hi):
        raise ValueError("box is empty: some lo > hi")

    def value(x):
        return float(np.sum(np.abs(A @ np.asarray(x, float) - b)))

    def subgrad(x):
        return A.T @ np.sign(A @ np.asarray(x, float) - b)

    subgrad_bound = float(np.sum(np.linalg.norm(A, axis=1)))
    psi_spec = ProxSpec.box(lo, hi)

    fstar = None
    strategy = "unavailable"
    if n <= 2:
        grid = GridSpec(lower=lo, upper=hi, points_per_axis=GRID_CONJ_POINTS)

        def batch(X):
            return np.abs(X @ A.T - b).sum(axis=1)

        fstar = make_grid_conjugate(None, grid, batch_values=batch)
        strategy = "numeric-grid"

    obj = CompositeObjective(
        phi=SmoothOracle(value=value, gradient=subgrad, lipschitz=None),
        psi=make_prox_oracle(psi_spec),
        dim=n,
        psi_conj=make_psi_conjugate(psi_spec),
        f_conj=fstar,
    )

    from scipy.optimize import linprog

    cvec = np.concatenate([np.zeros(n), np.ones(m)])
    A_ub = np.block([[A, -np.eye(m)], [-A, -np.eye(m)]])
    b_ub = np.concatenate([b, -b])
    bounds = [(float(l), float(h)) for l, h in zip(lo, hi)] + [(0.0, None)] * m
    res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise ArithmeticError(f"LP reference failed for {name!r}: {res.message}")
    x_bar = project_box(lo, hi, res.x[:n])
    f_bar = value(x_bar)
    f_acc = max(2.0 * abs(f_bar - float(res.fun)), 1e-9 * max(1.0, abs(f_bar)))
    data = {"name": name, "kind": "l1_regression", "seed": seed, "A": _mat_json(A),
            "b": b.tolist(), "lo": lo.tolist(), "hi": hi.tolist(), "x_0": x0.tolist()}
    return ProblemInstance(
        name=name, kind="l1_regression", objective=obj, x0=x0, L=None,
        f_bar=f_bar, f_bar_accuracy=f_acc,
        dist_x0=norm(x0 - x_bar), dist_accuracy=1e-6,
        x_bar=x_bar, fstar_strategy=strategy, smooth=False, data=data, seed=seed,
        subgrad=subgrad, subgrad_bound=subgrad_bound,
    )


# ---------------------------------------------------------------------------
# Test oracle: direct grid minimization of the prox objective.

def brute_force_prox(psi_value, t: float, x, grid: GridSpec) -> np.ndarray:
    """Grid argmin of psi(y) + ||x - y||^2 / (2t); dim <= 2 by construction."""
    if not t > 0:
        raise ValueError("step size must be positive")
    x = as_vector(x)
    pts = grid.points()
    vals = np.array([float(psi_value(p)) for p in pts])
    vals = vals + np.sum((pts - x) ** 2, axis=1) / (2.0 * t)
    if not np.isfinite(vals).any():
        raise ValueError("psi is +inf on every grid point")
    return pts[int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))]


def reference_points(inst: ProblemInstance, count: int, rng: np.random.Generator):
    """(x, f(x)) pairs for distance-form checks: seeded feasible draws."""
    pts = []
    lo = inst.data.get("lo")
    hi = inst.data.get("hi")
    anchor = inst.x_bar if inst.x_bar is not None else inst.x0
    attempts = 0
    while len(pts) < count and attempts < 50 * count:
        attempts += 1
        if lo is not None and hi is not None:
            lo_a = np.asarray(lo, float)
            hi_a = np.asarray(hi, float)
            x = lo_a + rng.random(inst.dim) * (hi_a - lo_a)
        else:
            x = anchor + rng.standard_normal(inst.dim)
        fx = inst.objective.value(x)
        if math.isfinite(fx):
            pts.append((x, fx))
    if len(pts) < count:
        raise ArithmeticError("could not draw enough feasible reference points")
    return pts


# ---------------------------------------------------------------------------
# Built-in registry.

def _builtin_quad_1d(seed: int) -> ProblemInstance:
    return make_least_squares([[2.0]], [2.0], [0.0], name="quad-1d", seed=seed)


def _builtin_quad_2d(seed: int) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 2))
    b = rng.standard_normal(3)
    x0 = 2.0 * rng.standard_normal(2)
    return make_least_squares(A, b, x0, name=f"quad-2d-s{seed}", seed=seed)


def _builtin_lasso_2d(seed: int) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 2))
    b = rng.standard_normal(4) * 2.0
    lam = 0.4 * float(np.max(np.abs(A.T @ b)))
    x0 = 1.5 * rng.standard_normal(2)
    return make_lasso(A, b, lam, x0, name=f"lasso-2d-s{seed}", seed=seed)


def _builtin_boxqp_2d(seed: int) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((2, 2))
    Q = B.T @ B + 0.5 * np.eye(2)
    c = rng.standard_normal(2) * 2.0
    x0 = rng.uniform(-1.0, 1.0, size=2)
    return make_box_qp(Q, c, [-1.0, -1.0], [1.0, 1.0], x0, name=f"boxqp-2d-s{seed}", seed=seed)


def _builtin_boxqp_10(seed: int) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((10, 10))
    Q = B.T @ B + 0.5 * np.eye(10)
    c = rng.standard_normal(10) * 2.0
    x0 = rng.uniform(-1.0, 1.0, size=10)
    lo = -np.ones(10)
    hi = np.ones(10)
    return make_box_qp(Q, c, lo, hi, x0, name=f"boxqp-10-s{seed}", seed=seed)


def _builtin_lasso_20(seed: int) -> ProblemInstance:
    # Singular values spread over three decades so the sublinear regime
    # survives long enough to measure tail slopes; a well-conditioned
    # design goes linear almost immediately once the support settles.
    rng = np.random.default_rng(seed)
    m, n = 30, 20
    u, _ = np.linalg.qr(rng.standard_normal((m, n)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sigma = np.logspace(0.0, -1.75, n)
    A = u @ np.diag(sigma) @ v.T
    b = A @ rng.standard_normal(n)
    lam = 0.002 * float(np.max(np.abs(A.T @ b)))
    x0 = np.zeros(n)
    return make_lasso(A, b, lam, x0, name=f"lasso-20-s{seed}", seed=seed)


def _builtin_l1reg_2d(seed: int) -> ProblemInstance:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 2))
    b = 0.8 * rng.standard_normal(6)
    x0 = rng.uniform(-1.0, 1.0, size=2)
    return make_l1_regression(A, b, [-1.0, -1.0], [1.0, 1.0], x0, name=f"l1reg-2d-s{seed}", seed=seed)


_BUILDERS: dict[str, tuple[Callable[[int], ProblemInstance], int]] = {
    "quad-1d": (_builtin_quad_1d, 0),
    "quad-2d": (_builtin_quad_2d, 11),
    "lasso-2d": (_builtin_lasso_2d, 5),
    "boxqp-2d": (_builtin_boxqp_2d, 3),
    "boxqp-10": (_builtin_boxqp_10, 7),
    "lasso-20": (_builtin_lasso_20, 7),
    "l1reg-2d": (_builtin_l1reg_2d, 13),
}

_CACHE: dict[tuple[str, int], ProblemInstance] = {}


def builtin_names() -> list[str]:
    return sorted(_BUILDERS)


def get_problem(ref: str, seed: int | None = None) -> ProblemInstance:
    """Resolve a problem reference: a built-in name or a JSON file path.

    The seed priority for built-ins is: explicit argument, then the
    PROXCERT_SEED environment variable, then the registry default.
    """
    if ref.endswith(".json") or os.sep in ref or os.path.isfile(ref):
        return load_problem(ref)
    if ref not in _BUILDERS:
        raise KeyError(
            f"unknown problem {ref!r}; built-ins: {', '.join(builtin_names())} "
            "(or pass a problem JSON path)"
        )
    builder, default_seed = _BUILDERS[ref]
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        seed = int(env) if env else default_seed
    key = (ref, seed)
    if key not in _CACHE:
        _CACHE[key] = builder(seed)
    return _CACHE[key]


def save_problem(inst: ProblemInstance, path: str) -> None:
    """Write the instance's defining data (not its certified metadata)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(inst.data, fh, indent=2)
        fh.write("\n")


def load_problem(path: str) -> ProblemInstance:
    """Rebuild an instance from a problem JSON file (metadata is recomputed)."""
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    kind = d.get("kind")
    name = d.get("name", os.path.basename(path))
    seed = d.get("seed")
    if kind == "least_squares":
        return make_least_squares(_mat_from(d["A"]), d["b"], d["x_0"], name=name, seed=seed)
    if kind == "lasso":
        return make_lasso(_mat_from(d["A"]), d["b"], float(d["lambda"]), d["x_0"], name=name, seed=seed)
    if kind == "box_qp":
        return make_box_qp(_mat_from(d["Q"]), d["c"], d["lo"], d["hi"], d["x_0"], name=name, seed=seed)
    if kind == "l1_regression":
        return make_l1_regression(_mat_from(d["A"]), d["b"], d["lo"], d["hi"], d["x_0"], name=name, seed=seed)
    raise ValueError(f"unknown problem kind {kind!r} in {path}")
