"""Composite convex solvers with per-iterate dual certificates.

The package splits into a small stack of layers:

* :mod:`proxcert.core` vector helpers, oracle containers, Fenchel gaps.
* :mod:`proxcert.prox` proximal operators, conjugates, grid fallbacks.
* :mod:`proxcert.schedules` momentum sequences and step-size rules.
* :mod:`proxcert.solvers` the two iteration templates and their traces.
* :mod:`proxcert.certificates` dual-sequence bound chains and rates.
* :mod:`proxcert.problems` built-in instances with certified references.
* :mod:`proxcert.report` trace CSV, report JSON, figures.
* :mod:`proxcert.cli` the ``proxcert`` command line tool.
"""

from .core import (
    CompositeObjective,
    ConjugateOracle,
    DimensionMismatch,
    ProxOracle,
    SmoothOracle,
    fenchel_young_gap,
)
from .prox import GridSpec, ProxSpec, make_prox_oracle, numeric_conjugate
from .schedules import (
    BacktrackingError,
    StepRule,
    ThetaSchedule,
    backtracking_step,
    fixed_step,
    validate_theta_pair,
)
from .solvers import Trace, run_algorithm1, run_algorithm2
from .certificates import (
    AveragedDualState,
    BoundReport,
    BoundRow,
    HypothesisViolation,
    ScaledDualState,
    anchor_report,
    averaged_chain_report,
    classic_subgradient_bounds,
    rate_report,
    scaled_chain_report,
    steep_bound,
    subgradient_chain_report,
)
from .problems import (
    ProblemInstance,
    builtin_names,
    get_problem,
    load_problem,
    make_box_qp,
    make_l1_regression,
    make_lasso,
    make_least_squares,
    reference_points,
    save_problem,
)

__version__ = "0.1.0"

__all__ = [
    "AveragedDualState",
    "BacktrackingError",
    "BoundReport",
    "BoundRow",
    "CompositeObjective",
    "ConjugateOracle",
    "DimensionMismatch",
    "GridSpec",
    "HypothesisViolation",
    "ProblemInstance",
    "ProxOracle",
    "ProxSpec",
    "ScaledDualState",
    "SmoothOracle",
    "StepRule",
    "ThetaSchedule",
    "Trace",
    "anchor_report",
    "averaged_chain_report",
    "backtracking_step",
    "builtin_names",
    "classic_subgradient_bounds",
    "fenchel_young_gap",
    "fixed_step",
    "get_problem",
    "load_problem",
    "make_box_qp",
    "make_l1_regression",
    "make_lasso",
    "make_least_squares",
    "make_prox_oracle",
    "numeric_conjugate",
    "rate_report",
    "reference_points",
    "run_algorithm1",
    "run_algorithm2",
    "save_problem",
    "scaled_chain_report",
    "steep_bound",
    "subgradient_chain_report",
    "validate_theta_pair",
    "__version__",
]
