"""Proximal operators, projections, and analytic convex conjugates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import INF, ConjugateOracle, ProxOracle, norm, norm_sq

__all__ = [
    "prox_zero",
    "prox_l1",
    "prox_sq_l2",
    "project_box",
    "project_l2_ball",
    "conjugate_l1",
    "conjugate_quadratic",
    "support_box",
    "GridSpec",
    "numeric_conjugate",
    "make_grid_conjugate",
    "ProxSpec",
    "make_prox_oracle",
    "make_psi_conjugate",
]


def _positive(**kwargs):
    for name, v in kwargs.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")


def prox_zero(t: float, x) -> np.ndarray:
    """Prox of the zero function: the identity map."""
    return np.asarray(x, dtype=float).copy()


def prox_l1(lam: float, t: float, x) -> np.ndarray:
    """Soft threshold sign(x) * max(|x| - t*lam, 0); exact ties map to 0."""
    _positive(lam=lam, t=t)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t * lam, 0.0)


def prox_sq_l2(lam: float, t: float, x) -> np.ndarray:
    """Prox of (lam/2)||.||^2: uniform shrinkage x / (1 + t*lam)."""
    _positive(lam=lam, t=t)
    return np.asarray(x, dtype=float) / (1.0 + t * lam)


def project_box(lo, hi, x) -> np.ndarray:
    """Componentwise clamp onto [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box is empty: some lo > hi")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def project_l2_ball(radius: float, center, x) -> np.ndarray:
    """Radial projection onto the closed ball of given radius and center."""
    _positive(radius=radius)
    center = np.asarray(center, dtype=float)
    x = np.asarray(x, dtype=float)
    d = x - center
    dist = norm(d)
    if dist <= radius:
        return x.copy()
    return center + (radius / dist) * d


def conjugate_l1(lam: float, z) -> float:
    """Conjugate of lam*||.||_1: indicator of the inf-norm ball of radius lam."""
    _positive(lam=lam)
    z = np.asarray(z, dtype=float)
    return 0.0 if float(np.max(np.abs(z), initial=0.0)) <= lam else INF


def conjugate_quadratic(Q, b, c: float, z) -> float:
    """Conjugate of h(x) = x'Qx/2 - b'x + c at z: (z+b)'Q^{-1}(z+b)/2 - c.

    Q must be symmetric positive definite; a Cholesky failure is a hard error.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    try:
        chol = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "conjugate_quadratic requires a symmetric positive definite Q"
        ) from exc
    w = z + b
    y = np.linalg.solve(chol, w)
    return 0.5 * float(np.dot(y, y)) - float(c)


def support_box(lo, hi, z) -> float:
    """Support function of the box [lo, hi]: sum_i max(z_i*lo_i, z_i*hi_i)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box is empty: some lo > hi")
    z = np.asarray(z, dtype=float)
    return float(np.sum(np.maximum(z * lo, z * hi)))


# ---------------------------------------------------------------------------
# Numeric conjugates on rectangular grids (dim <= 2, desk scale).

@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular evaluation grid, at most two axes.

    Resolution floor of 101 points per axis keeps the grid maximum within a
    usable distance of the true supremum on desk-scale boxes.
    """

    lower: np.ndarray
    upper: np.ndarray
    points_per_axis: int = 1001

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape:
            raise ValueError("lower/upper shape mismatch")
        if lo.size not in (1, 2):
            raise ValueError("grids support dimension 1 or 2 only")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("grid bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("grid needs lower < upper on every axis")
        if self.points_per_axis < 101:
            raise ValueError("points_per_axis must be at least 101")

    @property
    def dim(self) -> int:
        return self.lower.size

    def axes(self) -> list[np.ndarray]:
        return [
            np.linspace(self.lower[i], self.upper[i], self.points_per_axis)
            for i in range(self.dim)
        ]

    def points(self) -> np.ndarray:
        """All grid points as an (N, dim) array, N = points_per_axis^dim."""
        axes = self.axes()
        if self.dim == 1:
            return axes[0].reshape(-1, 1)
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.points_per_axis - 1)


def make_grid_conjugate(
    h_value: Callable[[np.ndarray], float],
    grid: GridSpec,
    batch_values: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ConjugateOracle:
    """Conjugate oracle maximizing <z, x> - h(x) over the grid.

    The result is a lower estimate of the true h*(z); points with h = +inf
    are skipped. ``batch_values`` may supply h on an (N, dim) array at once,
    otherwise h_value is called per point. The grid values are computed once
    and reused for every z.
    """
    pts = grid.points()
    if batch_values is not None:
        vals = np.asarray(batch_values(pts), dtype=float).ravel()
    else:
        vals = np.array([float(h_value(p)) for p in pts])
    keep = np.isfinite(vals)
    if not keep.any():
        raise ValueError("h is +inf on every grid point")
    pts_f = pts[keep]
    vals_f = vals[keep]

    def conj(z: np.ndarray) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return float(np.max(pts_f @ z - vals_f))

    return ConjugateOracle(conj_value=conj, kind="numeric-grid")


def numeric_conjugate(h_value, grid: GridSpec, z) -> float:
    """One-shot grid maximum of <z, x> - h(x); lower estimate of h*(z)."""
    return make_grid_conjugate(h_value, grid)(z)


# ---------------------------------------------------------------------------
# Named recipes for the nonsmooth term, so problems and tests can assemble
# matching (prox, value, conjugate) triples without re-deriving them.

@dataclass(frozen=True)
class ProxSpec:
    """Recipe for a concrete prox-friendly term."""

    kind: str  # zero | l1 | sq_l2 | box | l2_ball
    lam: float | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    radius: float | None = None
    center: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "l1", "sq_l2", "box", "l2_ball"):
            raise ValueError(f"unknown prox kind {self.kind!r}")
        if self.kind in ("l1", "sq_l2"):
            _positive(lam=self.lam)
        if self.kind == "box":
            lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
            hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
            if np.any(lo > hi):
                raise ValueError("box is empty: some lo > hi")
        if self.kind == "l2_ball":
            _positive(radius=self.radius)
            object.__setattr__(
                self, "center", np.atleast_1d(np.asarray(self.center, dtype=float))
            )

    @staticmethod
    def zero() -> "ProxSpec":
        return ProxSpec(kind="zero")

    @staticmethod
    def l1(lam: float) -> "ProxSpec":
        return ProxSpec(kind="l1", lam=lam)

    @staticmethod
    def sq_l2(lam: float) -> "ProxSpec":
        return ProxSpec(kind="sq_l2", lam=lam)

    @staticmethod
    def box(lo, hi) -> "ProxSpec":
        return ProxSpec(kind="box", lo=lo, hi=hi)

    @staticmethod
    def l2_ball(radius: float, center) -> "ProxSpec":
        return ProxSpec(kind="l2_ball", radius=radius, center=center)


def make_prox_oracle(spec: ProxSpec) -> ProxOracle:
    """Assemble the (value, prox) pair for a ProxSpec."""
    if spec.kind == "zero":
        return ProxOracle(value=lambda x: 0.0, prox=prox_zero)
    if spec.kind == "l1":
        lam = spec.lam
        return ProxOracle(
            value=lambda x: lam * float(np.sum(np.abs(np.asarray(x, float)))),
            prox=lambda t, x: prox_l1(lam, t, x),
        )
    if spec.kind == "sq_l2":
        lam = spec.lam
        return ProxOracle(
            value=lambda x: 0.5 * lam * norm_sq(x),
            prox=lambda t, x: prox_sq_l2(lam, t, x),
        )
    if spec.kind == "box":
        lo, hi = spec.lo, spec.hi

        def box_value(x):
            x = np.asarray(x, dtype=float)
            return 0.0 if bool(np.all(x >= lo) and np.all(x <= hi)) else INF

        return ProxOracle(value=box_value, prox=lambda t, x: project_box(lo, hi, x))
    if spec.kind == "l2_ball":
        r, c = spec.radius, spec.center
        # tolerant radius so the indicator is 0 on the projection's own
        # floating-point output
        r_eff = r * (1.0 + 1e-12) + 1e-15

        def ball_value(x):
            return 0.0 if norm(np.asarray(x, float) - c) <= r_eff else INF

        return ProxOracle(value=ball_value, prox=lambda t, x: project_l2_ball(r, c, x))
    raise ValueError(f"unknown prox kind {spec.kind!r}")


def make_psi_conjugate(spec: ProxSpec) -> ConjugateOracle:
    """Analytic conjugate of the term described by a ProxSpec."""
    if spec.kind == "zero":
        # conjugate of 0 is the indicator of {0}
        return ConjugateOracle(
            conj_value=lambda z: 0.0 if norm_sq(z) == 0.0 else INF, kind="analytic"
        )
    if spec.kind == "l1":
        lam = spec.lam
        return ConjugateOracle(conj_value=lambda z: conjugate_l1(lam, z), kind="analytic")
    if spec.kind == "sq_l2":
        lam = spec.lam
        return ConjugateOracle(
            conj_value=lambda z: norm_sq(z) / (2.0 * lam), kind="analytic"
        )
    if spec.kind == "box":
        lo, hi = spec.lo, spec.hi
        return ConjugateOracle(conj_value=lambda z: support_box(lo, hi, z), kind="analytic")
    if spec.kind == "l2_ball":
        r, c = spec.radius, spec.center
        return ConjugateOracle(
            conj_value=lambda z: float(np.dot(np.asarray(z, float), c))
            + r * norm(z),
            kind="analytic",
        )
    raise ValueError(f"unknown prox kind {spec.kind!r}")
