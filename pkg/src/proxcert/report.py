"""Trace serialization, report JSON, rate fitting, and figure rendering.

The trace CSV has a fixed column set and stores every float at 17
significant digits, so values round-trip bit for bit and a bound report can
be rebuilt from the file alone without the original vectors.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from typing import Sequence

import numpy as np

from .certificates import BOUND_ATOL, BOUND_RTOL, BoundReport, BoundRow, bound_tol
from .core import INF, norm
from .solvers import Trace

__all__ = [
    "TRACE_HEADER",
    "build_trace_rows",
    "write_trace_csv",
    "write_simple_csv",
    "read_trace_csv",
    "chain_rows_from_csv",
    "write_report_json",
    "fit_loglog_slope",
    "render_run_figure",
    "render_rates_figure",
]

TRACE_HEADER = [
    "k",
    "t_k",
    "theta_k",
    "f_x",
    "f_y",
    "norm_g",
    "norm_gphi",
    "norm_gpsi",
    "lhs",
    "rhs_conj",
    "rhs_dist",
    "S_k",
    "R_k",
]

# keys under which chain reports put their two right-hand sides
_CONJ_KEYS = ("conjugate", "scaled_conjugate")
_DIST_KEYS = ("distance", "schedule_distance")


def _fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".17g")


def _parse(cell: str):
    return None if cell == "" else float(cell)


def _first(bounds: dict, keys) -> float | None:
    for key in keys:
        if key in bounds:
            return bounds[key]
    return None


def build_trace_rows(
    trace: Trace,
    chain: BoundReport | None = None,
    scaled: BoundReport | None = None,
) -> list[dict]:
    """One CSV row per iteration record.

    Row j holds the step data of record j together with the certificate
    values available after consuming it (so S_k on row j sums i <= j). The
    lhs / rhs columns come from ``chain``; R_k comes from ``scaled`` when a
    rescaled certificate was run. Reports must be position-aligned with the
    trace (one row per record), which every chain builder guarantees.
    """
    for rep in (chain, scaled):
        if rep is not None and len(rep.rows) != len(trace.records):
            raise ValueError(
                f"report {rep.name!r} has {len(rep.rows)} rows for "
                f"{len(trace.records)} records"
            )
    rows = []
    s = 0.0
    for j, rec in enumerate(trace.records):
        s += rec.t / rec.theta
        row = {
            "k": rec.k,
            "t_k": rec.t,
            "theta_k": rec.theta,
            "f_x": rec.f_x_next,
            "f_y": rec.f_y,
            "norm_g": norm(rec.g),
            "norm_gphi": norm(rec.g_phi),
            "norm_gpsi": norm(rec.g_psi),
            "lhs": None,
            "rhs_conj": None,
            "rhs_dist": None,
            "S_k": s,
            "R_k": None,
        }
        if chain is not None:
            crow = chain.rows[j]
            row["lhs"] = crow.lhs
            row["rhs_conj"] = _first(crow.bounds, _CONJ_KEYS)
            row["rhs_dist"] = _first(crow.bounds, _DIST_KEYS)
        if scaled is not None:
            row["R_k"] = scaled.rows[j].extras.get("R")
            if chain is None:
                srow = scaled.rows[j]
                row["lhs"] = srow.lhs
                row["rhs_conj"] = _first(srow.bounds, _CONJ_KEYS)
                row["rhs_dist"] = _first(srow.bounds, _DIST_KEYS)
        rows.append(row)
    return rows


def _atomic_write(path: str, writer_fn) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path: str, rows: Sequence[dict]) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in rows:
            w.writerow(
                [str(int(row["k"]))] + [_fmt(row[col]) for col in TRACE_HEADER[1:]]
            )

    _atomic_write(path, emit)


def write_simple_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Generic delimited output at full float precision (first column int)."""

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([str(int(row[0]))] + [_fmt(v) for v in row[1:]])

    _atomic_write(path, emit)


def read_trace_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header in {path}: {header}")
        out = []
        for rec in r:
            row = {"k": int(rec[0])}
            for col, cell in zip(TRACE_HEADER[1:], rec[1:]):
                row[col] = _parse(cell)
            out.append(row)
    return out


def chain_rows_from_csv(
    rows: Sequence[dict], atol: float = BOUND_ATOL, rtol: float = BOUND_RTOL,
    index_from_one: bool = True,
) -> list[BoundRow]:
    """Rebuild chain bound rows from stored columns alone.

    Uses exactly the stored lhs / rhs_conj / rhs_dist values, so the result
    matches the in-memory report bit for bit on the fields a CSV can carry
    (k, lhs, bounds, slack, satisfied, vacuous); extras are not round-tripped.

    The CSV k column is the zero-based trace index.  Averaged and scaled
    chains label their rows by completed updates (from 1), the subgradient
    chain by iterate index (from 0); index_from_one picks the convention.
    """
    out = []
    for row in rows:
        lhs = row.get("lhs")
        if lhs is None:
            continue
        rc = row.get("rhs_conj")
        rd = row.get("rhs_dist")
        bounds: dict[str, float] = {}
        legs: list[tuple[float, float]] = []
        if rc is not None:
            bounds["conjugate"] = rc
            legs.append((lhs, rc))
            if rd is not None:
                bounds["distance"] = rd
                legs.append((rc, rd))
        elif rd is not None:
            bounds["distance"] = rd
            legs.append((lhs, rd))
        satisfied = True
        vacuous = False
        slack = INF
        for a, b in legs:
            if math.isinf(b):
                vacuous = True
                continue
            satisfied = satisfied and (a <= b + bound_tol(b, atol, rtol))
            slack = min(slack, b - a)
        k = row["k"] + 1 if index_from_one else row["k"]
        out.append(
            BoundRow(k=k, lhs=lhs, bounds=bounds, slack=slack,
                     satisfied=satisfied, vacuous=vacuous)
        )
    return out


# ---------------------------------------------------------------------------
# Report JSON.

def _jsonable(obj):
    """JSON-safe copy: non-finite floats become the strings inf/-inf/nan."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report_json(path: str, payload: dict) -> None:
    def emit(fh):
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")

    _atomic_write(path, emit)


# ---------------------------------------------------------------------------
# Rate fitting.

def fit_loglog_slope(
    ks: Sequence[float], gaps: Sequence[float], k_min: int = 10, floor: float = 0.0
) -> float:
    """Least-squares slope of log(gap) against log(k).

    Points with k < k_min are dropped (transient), as are gaps at or below
    ``floor`` (accuracy noise floor of the reference optimum).
    """
    ks = np.asarray(ks, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    keep = (ks >= k_min) & (gaps > max(floor, 0.0)) & np.isfinite(gaps)
    if keep.sum() < 2:
        raise ValueError("not enough usable points above the noise floor for a fit")
    coef = np.polyfit(np.log(ks[keep]), np.log(gaps[keep]), 1)
    return float(coef[0])


# ---------------------------------------------------------------------------
# Figures. matplotlib is imported lazily so library use never pays for it.

def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_run_figure(path: str, rows: Sequence[dict], f_bar: float | None = None,
                      title: str = "") -> None:
    """Two panels next to the trace: objective progress and the verified
    chain (lhs against each stored right-hand side)."""
    plt = _plt()
    ks = np.array([row["k"] + 1 for row in rows], dtype=float)
    fx = np.array([row["f_x"] for row in rows], dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    if f_bar is not None:
        gap = np.maximum(fx - f_bar, 1e-300)
        ax1.loglog(ks, gap, label="f(x_k) - f_bar")
        ax1.set_ylabel("objective gap")
    else:
        ax1.semilogx(ks, fx, label="f(x_k)")
        ax1.set_ylabel("objective value")
    ax1.set_xlabel("k")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)

    def series(col):
        vals = [(k, row[col]) for k, row in zip(ks, rows)
                if row[col] is not None and math.isfinite(row[col])]
        return (np.array([v[0] for v in vals]), np.array([v[1] for v in vals]))

    plotted_any = False
    for col, label in (("lhs", "lhs"), ("rhs_conj", "conjugate rhs"),
                       ("rhs_dist", "distance rhs")):
        xs, ys = series(col)
        if xs.size:
            ax2.semilogx(xs, ys, label=label)
            plotted_any = True
    ax2.set_xlabel("k")
    ax2.set_ylabel("bound value")
    if plotted_any:
        ax2.legend()
    else:
        ax2.set_title("no chain columns in this trace", fontsize=9)
    ax2.grid(True, which="both", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_rates_figure(path: str, curves: dict[str, tuple[Sequence[float], Sequence[float]]],
                        title: str = "") -> None:
    """Log-log overlay of measured gaps and their worst-case bounds."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, (ks, vals) in curves.items():
        ks = np.asarray(ks, dtype=float)
        vals = np.maximum(np.asarray(vals, dtype=float), 1e-300)
        style = "--" if "bound" in label else "-"
        ax.loglog(ks, vals, style, label=label)
    ax.set_xlabel("k")
    ax.set_ylabel("objective gap")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
