"""Inner-product space primitives, function oracles, composite objectives.

Vectors are finite 1-D float64 numpy arrays. Values of nonsmooth terms may
be +inf (points outside the effective domain); -inf never occurs because
everything handled here is closed, proper and convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

INF = math.inf

__all__ = [
    "INF",
    "DimensionMismatch",
    "as_vector",
    "inner",
    "norm",
    "norm_sq",
    "ext_add",
    "SmoothOracle",
    "ProxOracle",
    "ConjugateOracle",
    "CompositeObjective",
    "eval_f",
    "fenchel_young_gap",
    "prox_optimality_gap",
    "nonexpansive_excess",
    "scaled_conjugate",
]


class DimensionMismatch(ValueError):
    """Two vectors of different dimension met a binary operation."""


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-D float64 array (scalars become length-1)."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


def inner(a, b) -> float:
    """Euclidean inner product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm_sq(a) -> float:
    """Squared Euclidean norm."""
    a = np.asarray(a, dtype=float)
    return float(np.dot(a, a))


def norm(a) -> float:
    return math.sqrt(norm_sq(a))


def ext_add(a: float, b: float) -> float:
    """Extended-real sum. Any infinite operand absorbs the result to +inf.

    This keeps indicator arithmetic free of NaN (inf - inf can never form
    because -inf is not a value any oracle here produces).
    """
    if math.isinf(a) or math.isinf(b):
        return INF
    return float(a) + float(b)


@dataclass(frozen=True)
class SmoothOracle:
    """Differentiable convex term: value, gradient, optional curvature bound.

    ``lipschitz`` is an upper bound on the gradient's Lipschitz constant when
    one is known; None means unknown (backtracking still works).
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float | None = None


@dataclass(frozen=True)
class ProxOracle:
    """Prox-friendly convex term.

    ``value(x)`` may return +inf outside the domain. ``prox(t, x)`` solves
    argmin_y  value(y) + ||x - y||^2 / (2 t)  for t > 0, exactly.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConjugateOracle:
    """Evaluates the convex conjugate h*(z) = sup_x <z, x> - h(x).

    ``kind`` records how: "analytic" (closed form), "dual-solve" (inner
    minimization, exact at desk scale), or "numeric-grid" (grid maximum,
    a lower estimate of the true h*).
    """

    conj_value: Callable[[np.ndarray], float]
    kind: str

    def __call__(self, z) -> float:
        return float(self.conj_value(np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class CompositeObjective:
    """Composite objective f = phi + psi with optional conjugate oracles.

    Dimension is validated once at construction (one gradient and one prox
    probe), not inside iteration loops.
    """

    phi: SmoothOracle
    psi: ProxOracle
    dim: int
    phi_conj: ConjugateOracle | None = None
    psi_conj: ConjugateOracle | None = None
    f_conj: ConjugateOracle | None = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")
        probe = np.zeros(self.dim)
        g = np.asarray(self.phi.gradient(probe), dtype=float)
        if g.shape != (self.dim,):
            raise DimensionMismatch(
                f"phi.gradient returns shape {g.shape}, expected ({self.dim},)"
            )
        p = np.asarray(self.psi.prox(1.0, probe), dtype=float)
        if p.shape != (self.dim,):
            raise DimensionMismatch(
                f"psi.prox returns shape {p.shape}, expected ({self.dim},)"
            )
        if not math.isfinite(float(self.psi.value(p))):
            raise ValueError("psi is not finite at its own prox output")

    def value(self, x) -> float:
        """f(x) = phi(x) + psi(x); +inf outside the domain of psi."""
        return ext_add(float(self.phi.value(x)), float(self.psi.value(x)))


def eval_f(obj: CompositeObjective, x) -> float:
    """Composite objective value phi(x) + psi(x) in extended-real arithmetic."""
    return obj.value(x)


# ---------------------------------------------------------------------------
# Runtime assertion helpers for oracle pairs. These quantify how far a pair
# of oracles is from satisfying a defining inequality; tests and problem
# self-checks assert the gaps against small tolerances.

def fenchel_young_gap(h_value, conj_value, z, x) -> float:
    """h*(z) + h(x) - <z, x>.

    Nonnegative for a genuine conjugate pair; zero exactly when z is a
    subgradient of h at x.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    total = ext_add(float(conj_value(z)), float(h_value(x)))
    if math.isinf(total):
        return INF
    return total - inner(z, x)


def prox_optimality_gap(psi: ProxOracle, t: float, x, probe) -> float:
    """Subgradient inequality slack of the prox point against one probe.

    With p = prox_t(x) the vector (x - p)/t is a subgradient of psi at p,
    so psi(probe) - psi(p) - <(x - p)/t, probe - p> must be >= 0.
    """
    x = np.asarray(x, dtype=float)
    probe = np.asarray(probe, dtype=float)
    p = np.asarray(psi.prox(t, x), dtype=float)
    lhs = ext_add(float(psi.value(probe)), -float(psi.value(p)))
    if math.isinf(lhs):
        return INF
    return lhs - inner((x - p) / t, probe - p)


def nonexpansive_excess(psi: ProxOracle, t: float, a, b) -> float:
    """||prox(a) - prox(b)|| - ||a - b||; <= 0 for any true prox map."""
    pa = np.asarray(psi.prox(t, np.asarray(a, dtype=float)), dtype=float)
    pb = np.asarray(psi.prox(t, np.asarray(b, dtype=float)), dtype=float)
    return norm(pa - pb) - norm(np.asarray(a, float) - np.asarray(b, float))


def scaled_conjugate(conj_value, r: float, z) -> float:
    """Conjugate of r*h evaluated at z via (r h)*(z) = r h*(z / r), r > 0."""
    if r <= 0:
        raise ValueError("scaling factor must be positive")
    z = np.asarray(z, dtype=float)
    hz = float(conj_value(z / r))
    if math.isinf(hz):
        return INF
    return r * hz
