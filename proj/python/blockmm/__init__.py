"""Block-wise randomized matrix multiplication by importance sampling of outer products."""

from ._core import (
    DimensionError,
    SamplingPlan,
    bounds,
    column_norms,
    elementwise_variance,
    expected_sq_error,
    frobenius_norm,
    generate,
    integerize,
    make_plan,
    multiply_exact,
    optimal_objective,
    optimal_probabilities,
    plan_from_json,
    relative_error,
    row_norms,
    sabmm,
    ssm_estimate,
)

METHODS = ("OPL", "ONC", "ONU", "ONMCNR", "UU", "SSM")

__all__ = [
    "METHODS",
    "DimensionError",
    "SamplingPlan",
    "bounds",
    "column_norms",
    "elementwise_variance",
    "expected_sq_error",
    "frobenius_norm",
    "generate",
    "integerize",
    "make_plan",
    "multiply_exact",
    "optimal_objective",
    "optimal_probabilities",
    "plan_from_json",
    "relative_error",
    "row_norms",
    "sabmm",
    "ssm_estimate",
]
