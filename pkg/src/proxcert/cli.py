"""Command line interface.

Three subcommands: ``run`` executes one solver configuration with
certificate checks attached and writes the trace CSV, the report JSON, and
a figure next to them; ``rates`` compares measured convergence against the
worst-case curves; ``verify-all`` sweeps every built-in problem through
every applicable check.

Exit codes: 0 all requested checks passed, 1 usage or configuration error,
2 at least one check failed (or a runtime hypothesis violation).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .certificates import (
    HypothesisViolation,
    anchor_report,
    averaged_chain_report,
    classic_subgradient_bounds,
    rate_accel,
    rate_prox_grad,
    rate_report,
    scaled_chain_report,
    scaled_distance_bound,
    subgradient_chain_report,
)
from .problems import (
    SEED_ENV_VAR,
    ProblemInstance,
    builtin_names,
    get_problem,
    reference_points,
)
from .report import (
    build_trace_rows,
    fit_loglog_slope,
    render_rates_figure,
    render_run_figure,
    write_report_json,
    write_simple_csv,
    write_trace_csv,
)
from .schedules import BacktrackingError, StepRule, ThetaSchedule, backtracking_step, fixed_step
from .solvers import Trace, run_algorithm1, run_algorithm2

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECKFAIL = 2

# stable CLI names for the five check families
CHECK_TOKENS = ("thm1", "thm2", "prop1", "rates", "anchors")

MOMENTUM_ALGS = ("prox_grad", "accel_prox_grad")
SUBGRAD_ALGS = ("prox_subgrad", "proj_subgrad")


class UsageError(Exception):
    """Configuration problem that maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # failed checks here, so route usage problems to 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


# ---------------------------------------------------------------------------
# Step-rule mini-language.

def _auto_or_float(token: str, L: float | None, what: str) -> float:
    if token == "auto" or token.startswith("auto*"):
        if L is None:
            raise UsageError(f"{what}: 'auto' needs a problem with a curvature bound")
        mult = 1.0 if token == "auto" else float(token[5:])
        return mult / L
    return float(token)


def parse_momentum_step(spec: str, L: float | None) -> StepRule:
    """fixed:auto | fixed:auto*M | fixed:VALUE | backtracking[:k=v,...]

    Backtracking options: t_init (value or auto / auto*M), beta, monotone
    (0 or 1), max_shrinks.
    """
    if spec.startswith("fixed:"):
        return fixed_step(_auto_or_float(spec[len("fixed:"):], L, "fixed step"))
    if spec == "backtracking" or spec.startswith("backtracking:"):
        opts = {"t_init": "auto", "beta": "0.5", "monotone": "0", "max_shrinks": "100"}
        if ":" in spec:
            for item in spec.split(":", 1)[1].split(","):
                if "=" not in item:
                    raise UsageError(f"bad backtracking option {item!r} (expected k=v)")
                k, v = item.split("=", 1)
                if k not in opts:
                    raise UsageError(f"unknown backtracking option {k!r}")
                opts[k] = v
        return backtracking_step(
            t_init=_auto_or_float(opts["t_init"], L, "t_init"),
            beta=float(opts["beta"]),
            monotone=opts["monotone"] not in ("0", "false", "False"),
            max_shrinks=int(opts["max_shrinks"]),
        )
    raise UsageError(f"bad step spec {spec!r} for a momentum run")


def parse_subgrad_step(spec: str, iters: int) -> tuple[str, list[float]]:
    """const:C | sqrt:C | normalized:const:C | normalized:sqrt:C

    Returns ("steps", [...]) for raw step sizes t_i, or ("alphas", [...])
    for the normalized mode t_i = alpha_i / ||g_phi_i||.
    """
    normalized = False
    body = spec
    if spec.startswith("normalized:"):
        normalized = True
        body = spec[len("normalized:"):]
    if body.startswith("const:"):
        c = float(body[len("const:"):])
        seq = [c] * iters
    elif body.startswith("sqrt:"):
        c = float(body[len("sqrt:"):])
        seq = [c / math.sqrt(i + 1.0) for i in range(iters)]
    else:
        raise UsageError(f"bad step spec {spec!r} for a subgradient run")
    if c <= 0:
        raise UsageError("step constant must be positive")
    return ("alphas" if normalized else "steps", seq)


# ---------------------------------------------------------------------------
# Check selection and validation.

def resolve_checks(tokens: str, algorithm: str, theta_kind: str, step: StepRule | None,
                   inst: ProblemInstance) -> list[str]:
    momentum = algorithm in MOMENTUM_ALGS
    if tokens == "auto":
        checks: list[str] = []
        if momentum:
            checks = ["anchors", "rates"]
            if inst.fstar is not None and (
                theta_kind == "constant_one"
                or (theta_kind == "fista" and step is not None and step.kind == "fixed")
            ):
                checks.insert(0, "thm1")
            if step is not None and (step.kind == "fixed" or step.monotone):
                checks.insert(1 if checks[0] == "thm1" else 0, "thm2")
        else:
            checks = ["rates"]
            if inst.fstar is not None:
                checks.insert(0, "prop1")
        return checks
    checks = [tok.strip() for tok in tokens.split(",") if tok.strip()]
    if not checks:
        raise UsageError("empty check list")
    for tok in checks:
        if tok not in CHECK_TOKENS:
            raise UsageError(f"unknown check {tok!r}; choose from {', '.join(CHECK_TOKENS)}")
    for tok in checks:
        if tok in ("thm1", "thm2", "anchors") and not momentum:
            raise UsageError(f"check {tok!r} applies to momentum runs only")
        if tok == "prop1" and momentum:
            raise UsageError("check 'prop1' applies to subgradient runs only")
    if "thm1" in checks:
        if inst.fstar is None:
            raise UsageError(
                f"check 'thm1' needs a conjugate oracle; problem {inst.name!r} "
                f"has strategy {inst.fstar_strategy!r}"
            )
        ok = theta_kind == "constant_one" or (
            theta_kind == "fista" and step is not None and step.kind == "fixed"
        )
        if not ok:
            raise UsageError(
                "check 'thm1' needs unit momentum (any steps) or the "
                "accelerated schedule with a fixed step"
            )
    if "thm2" in checks and step is not None and step.kind == "backtracking" and not step.monotone:
        raise UsageError("check 'thm2' needs non-increasing steps; use backtracking monotone=1")
    if "prop1" in checks and inst.fstar is None:
        raise UsageError(
            f"check 'prop1' needs a conjugate oracle; problem {inst.name!r} "
            f"has strategy {inst.fstar_strategy!r}"
        )
    if "rates" in checks and momentum and inst.L is None:
        raise UsageError("check 'rates' on a momentum run needs a curvature bound")
    return checks


def _averaged_mode(theta_kind: str) -> str:
    return "ergodic" if theta_kind == "constant_one" else "last"


def _rate_for_momentum(trace: Trace, inst: ProblemInstance):
    """Rate check with a curvature constant that matches the steps actually
    taken: 1/min(t) covers fixed and monotone backtracking runs alike, but
    the accelerated classic form is only claimed for fixed steps."""
    min_t = min(rec.t for rec in trace.records)
    basic = trace.theta_kind == "constant_one"
    L_eff = 1.0 / min_t
    if not basic and trace.step_kind != "fixed":
        L_eff = None  # sum form only
    return rate_report(
        trace,
        inst.f_bar,
        inst.dist_x0,
        L=L_eff,
        variant="basic" if basic else "accel",
    )


def _chain_refs(inst: ProblemInstance, rng, count: int = 3):
    """Reference points for the distance leg of a chain.

    A grid conjugate over-estimates the conjugate rhs by its resolution
    error, so comparing it against the distance form at the optimum (margin
    shrinking to zero) would produce false failures; random feasible points
    keep an order-one margin instead. Exact conjugates can use the optimum.
    """
    if inst.fstar is not None and inst.fstar.kind == "numeric-grid":
        return reference_points(inst, count, rng)
    if inst.x_bar is not None:
        return [(inst.x_bar, inst.f_bar)]
    return reference_points(inst, count, rng)


def run_checks(checks, trace: Trace, inst: ProblemInstance, rng) -> dict:
    """Execute the requested checks; returns name -> BoundReport."""
    reports = {}
    refs = _chain_refs(inst, rng)
    for tok in checks:
        if tok == "thm1":
            reports[tok] = averaged_chain_report(
                trace, trace.x0, _averaged_mode(trace.theta_kind),
                fstar=inst.fstar, refs=refs,
            )
        elif tok == "thm2":
            reports[tok] = scaled_chain_report(
                trace, trace.x0, inst.dist_x0, inst.f_bar, fstar=inst.fstar
            )
        elif tok == "prop1":
            reports[tok] = subgradient_chain_report(
                trace, trace.x0, fstar=inst.fstar, refs=refs
            )
        elif tok == "anchors":
            reports[tok] = anchor_report(trace, trace.x0)
        elif tok == "rates":
            if trace.algorithm in ("prox_grad", "accel_prox_grad"):
                reports[tok] = _rate_for_momentum(trace, inst)
            else:
                reports[tok] = classic_subgradient_bounds(
                    trace, inst.f_bar, inst.dist_x0, L_bound=inst.subgrad_bound
                )
    return reports


def print_reports(reports: dict) -> bool:
    all_ok = True
    for tok, rep in reports.items():
        k, slack = rep.worst
        status = "PASS" if rep.satisfied else "FAIL"
        where = "" if k is None else f" worst_slack={slack:.3e} at k={k}"
        print(f"check {tok} ({rep.name}): {status}{where}")
        for note in rep.notes:
            print(f"  note: {note}")
        if not rep.satisfied:
            bad = next(r for r in rep.rows if not r.satisfied)
            detail = ", ".join(f"{name}={val:.17g}" for name, val in bad.bounds.items())
            print(f"  first failure at k={bad.k}: lhs={bad.lhs:.17g} vs {detail}")
            all_ok = False
    return all_ok


# ---------------------------------------------------------------------------
# Subcommands.

def cmd_run(args) -> int:
    inst = get_problem(args.problem, seed=args.seed)
    algorithm = args.algorithm
    if algorithm == "auto":
        algorithm = "accel_prox_grad" if inst.smooth else "prox_subgrad"
    momentum = algorithm in MOMENTUM_ALGS
    if momentum and not inst.smooth:
        raise UsageError(
            f"problem {inst.name!r} has a nonsmooth loss; use a subgradient algorithm"
        )
    if not momentum and inst.subgrad is None:
        raise UsageError(f"problem {inst.name!r} carries no subgradient oracle")

    theta_kind = args.theta
    if theta_kind == "auto":
        theta_kind = "fista" if algorithm == "accel_prox_grad" else "constant_one"
    if momentum:
        if algorithm == "prox_grad" and theta_kind != "constant_one":
            raise UsageError("prox_grad means unit momentum; pick accel_prox_grad instead")
        if algorithm == "accel_prox_grad" and theta_kind == "constant_one":
            raise UsageError("accel_prox_grad needs a decreasing momentum schedule")

    step_rule = None
    step_seq = None
    if momentum:
        step_rule = parse_momentum_step(args.step or "fixed:auto", inst.L)
    else:
        step_seq = parse_subgrad_step(args.step or "sqrt:1.0", args.iters)

    checks = resolve_checks(args.check, algorithm, theta_kind, step_rule, inst)

    if momentum:
        trace = run_algorithm1(
            inst.objective, ThetaSchedule(theta_kind), step_rule, inst.x0, args.iters
        )
    else:
        kind, seq = step_seq
        trace = run_algorithm2(
            inst.objective, inst.subgrad, inst.x0, args.iters,
            steps=seq if kind == "steps" else None,
            alphas=seq if kind == "alphas" else None,
        )
        if trace.optimal_early:
            print(f"zero subgradient at iteration {len(trace)}: iterate is optimal")

    rng = np.random.default_rng(args.seed if args.seed is not None else 2024)
    reports = run_checks(checks, trace, inst, rng)

    chain = next((reports[t] for t in ("thm1", "prop1") if t in reports), None)
    scaled = reports.get("thm2")
    rows = build_trace_rows(trace, chain=chain, scaled=scaled)

    os.makedirs(args.out_dir, exist_ok=True)
    trace_path = os.path.join(args.out_dir, "trace.csv")
    fig_path = os.path.join(args.out_dir, "run.png")
    report_path = os.path.join(args.out_dir, "report.json")
    write_trace_csv(trace_path, rows)
    render_run_figure(fig_path, rows, f_bar=inst.f_bar,
                      title=f"{inst.name}: {algorithm}")

    all_ok = print_reports(reports)
    hypotheses = sorted({h for rep in reports.values() for h in rep.hypothesis})
    payload = {
        "command": "run",
        "config": {
            "problem": args.problem,
            "resolved_problem": inst.name,
            "algorithm": algorithm,
            "theta": theta_kind,
            "step": args.step or ("fixed:auto" if momentum else "sqrt:1.0"),
            "iters": args.iters,
            "seed": inst.seed,
            "checks": checks,
        },
        "problem": {
            "name": inst.name,
            "kind": inst.kind,
            "dim": inst.dim,
            "L": inst.L,
            "f_bar": inst.f_bar,
            "f_bar_accuracy": inst.f_bar_accuracy,
            "dist_x0": inst.dist_x0,
            "fstar_strategy": inst.fstar_strategy,
        },
        "hypotheses": hypotheses,
        "checks": [rep.summary() | {"token": tok} for tok, rep in reports.items()],
        "files": {"trace": trace_path, "figure": fig_path},
    }
    write_report_json(report_path, payload)
    print(f"wrote {trace_path}, {report_path}, {fig_path}")
    return EXIT_OK if all_ok else EXIT_CHECKFAIL


def cmd_rates(args) -> int:
    """One momentum run against its worst-case curves.

    Columns: gap f(x_k) - f_bar, the 1/k and 1/k^2 bound curves at the
    effective curvature 1/min(t), the per-step scaled distance bound, and
    the ratio gap/bound for the bound the run's schedule actually claims
    (0/0 reads as 0). The tail-half gap is fitted log-log for the empirical
    exponent.
    """
    inst = get_problem(args.problem, seed=args.seed)
    if not inst.smooth or inst.L is None:
        raise UsageError("rates needs a smooth problem with a curvature bound")
    algorithm = args.algorithm
    if algorithm == "auto":
        algorithm = "accel_prox_grad"
    if algorithm not in MOMENTUM_ALGS:
        raise UsageError("rates covers the momentum algorithms only")
    basic = algorithm == "prox_grad"
    theta_kind = "constant_one" if basic else "fista"
    step = parse_momentum_step(args.step or "fixed:auto", inst.L)
    trace = run_algorithm1(inst.objective, ThetaSchedule(theta_kind), step,
                           inst.x0, args.iters)

    dist = inst.dist_x0
    min_t = min(rec.t for rec in trace.records)
    L_eff = 1.0 / min_t
    ks, gaps, b1, b2, bthm2, ratios = [], [], [], [], [], []
    for rec in trace.records:
        k = rec.k + 1
        gap = rec.f_x_next - inst.f_bar
        ks.append(k)
        gaps.append(gap)
        b1.append(rate_prox_grad(L_eff, dist, k))
        b2.append(rate_accel(L_eff, dist, k))
        bthm2.append(scaled_distance_bound(rec.theta, rec.t, dist))
        bound = b1[-1] if basic else b2[-1]
        ratios.append(0.0 if bound == 0.0 else max(gap, 0.0) / bound)

    rep = rate_report(trace, inst.f_bar, dist, L=L_eff,
                      variant="basic" if basic else "accel")
    floor = max(1e-13, 10.0 * inst.f_bar_accuracy)
    try:
        slope = fit_loglog_slope(ks, gaps, k_min=max(2, args.iters // 2), floor=floor)
    except ValueError:
        slope = None

    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "rates.csv")
    fig_path = os.path.join(args.out_dir, "rates.png")
    json_path = os.path.join(args.out_dir, "rates.json")
    write_simple_csv(csv_path, ["k", "gap", "bound_1k", "bound_1k2", "bound_thm2", "ratio"],
                     list(zip(ks, gaps, b1, b2, bthm2, ratios)))
    render_rates_figure(fig_path, {
        "gap": (ks, gaps), "bound 1/k": (ks, b1),
        "bound 1/k^2": (ks, b2), "bound scaled": (ks, bthm2),
    }, title=f"{inst.name}: {algorithm}")

    k_worst, slack = rep.worst
    print(f"rate check ({rep.name}): {'PASS' if rep.satisfied else 'FAIL'} "
          f"worst_slack={slack:.3e} at k={k_worst}")
    print(f"tail-half fit: exponent={'n/a' if slope is None else format(slope, '.3f')}")
    payload = {
        "command": "rates",
        "config": {"problem": args.problem, "resolved_problem": inst.name,
                   "algorithm": algorithm, "iters": args.iters, "seed": inst.seed,
                   "step": args.step or "fixed:auto"},
        "fit": {"tail_exponent": slope, "noise_floor": floor},
        "checks": [rep.summary()],
        "files": {"rates": csv_path, "figure": fig_path},
    }
    write_report_json(json_path, payload)
    print(f"wrote {csv_path}, {json_path}, {fig_path}")
    return EXIT_OK if rep.satisfied else EXIT_CHECKFAIL


def cmd_verify_all(args) -> int:
    """Run the full acceptance matrix and summarize it."""
    if args.inject_fault == "theta":
        # rigged momentum values that break the pair inequality; the scaled
        # certificate must refuse them at runtime
        inst = get_problem("quad-2d", seed=args.seed)
        n_steps = 10
        bad = ThetaSchedule("custom", values=[1.0] + [0.2] * (n_steps + 1))
        trace = run_algorithm1(inst.objective, bad, fixed_step(1.0 / inst.L),
                               inst.x0, n_steps)
        scaled_chain_report(trace, trace.x0, inst.dist_x0, inst.f_bar, fstar=inst.fstar)
        print("fault injection failed: rigged schedule was not rejected", file=sys.stderr)
        return EXIT_CHECKFAIL

    from .acceptance import run_all

    results = run_all(seed=args.seed)
    ok = all(r.passed for r in results)
    if args.json:
        import json as _json

        print(_json.dumps({
            "satisfied": ok,
            "criteria": [
                {"id": r.cid, "name": r.name, "passed": r.passed,
                 "detail": r.detail, "seconds": round(r.seconds, 3)}
                for r in results
            ],
        }, indent=2))
    else:
        for r in results:
            mark = "PASS" if r.passed else "FAIL"
            print(f"ACCEPTANCE {r.cid:02d} {mark} {r.name}: {r.detail}")
        n_fail = sum(not r.passed for r in results)
        total = sum(r.seconds for r in results)
        print(f"{len(results)} criteria, {n_fail} failures, {total:.1f}s")
    return EXIT_OK if ok else EXIT_CHECKFAIL


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    p = _Parser(prog="proxcert",
                description="composite minimization with per-iterate certificate checks")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, iters_default):
        sp.add_argument("--problem", required=True,
                        help=f"built-in name ({', '.join(builtin_names())}) or problem JSON path")
        sp.add_argument("--iters", type=int, default=iters_default)
        sp.add_argument("--seed", type=int, default=None,
                        help=f"instance seed (also honors ${SEED_ENV_VAR})")
        sp.add_argument("--out-dir", default="proxcert-out")

    runp = sub.add_parser("run", help="one solver run with checks")
    common(runp, 100)
    runp.add_argument("--algorithm", default="auto",
                      choices=("auto",) + MOMENTUM_ALGS + SUBGRAD_ALGS)
    runp.add_argument("--theta", default="auto",
                      choices=("auto", "constant_one", "fista", "two_over_kplus2"))
    runp.add_argument("--step", default=None,
                      help="momentum: fixed:auto | fixed:V | backtracking:t_init=..,beta=..,"
                           "monotone=0/1; subgradient: const:C | sqrt:C | normalized:const:C"
                           " | normalized:sqrt:C")
    runp.add_argument("--check", default="auto",
                      help=f"comma list from {{{','.join(CHECK_TOKENS)}}} or 'auto'")
    runp.set_defaults(fn=cmd_run)

    ratesp = sub.add_parser("rates", help="measured gaps against worst-case curves")
    common(ratesp, 1000)
    ratesp.add_argument("--algorithm", default="auto",
                        choices=("auto",) + MOMENTUM_ALGS)
    ratesp.add_argument("--step", default=None,
                        help="fixed:auto | fixed:V | backtracking:t_init=..,beta=..,monotone=0/1")
    ratesp.set_defaults(fn=cmd_rates)

    vap = sub.add_parser("verify-all", help="sweep all built-ins through all checks")
    vap.add_argument("--iters", type=int, default=200)
    vap.add_argument("--seed", type=int, default=None)
    vap.add_argument("--json", action="store_true", help="machine-readable summary")
    vap.add_argument("--inject-fault", default=None, choices=("theta",),
                     help="rig a hypothesis violation; the run must be rejected")
    vap.set_defaults(fn=cmd_verify_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "iters", 1) < 1:
        print("proxcert: error: --iters must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"proxcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"proxcert: hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_CHECKFAIL
    except BacktrackingError as exc:
        print(f"proxcert: step search failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError, OSError, ArithmeticError) as exc:
        print(f"proxcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
