"""Finite-state nonlinear Markov chains: contraction coefficients, invariant laws,
convergence-bound audits and mean-field particle simulation."""

__version__ = "0.1.0"

from .catalog import builtin, example1, example2
from .contraction import (
    CoefficientReport,
    SearchConfig,
    alpha_one_step,
    certified_coefficients,
    classify,
    coefficients_k_step,
    lambda_one_step,
    one_step_report,
)
from .dynamics import (
    BoundAudit,
    InvariantResult,
    Trajectory,
    audit_convergence,
    bound_value,
    invariant,
    iterate,
    lemma_bound_sequence,
    odd_step_check,
)
from .kernels import AffineKernel, evaluate, k_step, step, two_step, validate
from .measures import StateSpace, as_distribution, meet_measure, simplex_grid, tv_distance
from .optimize import Bracket
from .particles import advance, init_ensemble, law_error_curve

__all__ = [
    "AffineKernel", "BoundAudit", "Bracket", "CoefficientReport", "InvariantResult",
    "SearchConfig", "StateSpace", "Trajectory", "advance", "alpha_one_step",
    "as_distribution", "audit_convergence", "bound_value", "builtin",
    "certified_coefficients", "classify", "coefficients_k_step", "evaluate", "example1",
    "example2", "init_ensemble", "invariant", "iterate", "k_step", "lambda_one_step",
    "law_error_curve", "lemma_bound_sequence", "meet_measure", "odd_step_check",
    "one_step_report", "simplex_grid", "step", "tv_distance", "two_step", "validate",
]
