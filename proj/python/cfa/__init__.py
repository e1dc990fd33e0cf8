"""Rank-constrained factor analysis: conditional-gradient upper bounds and branch-and-bound
certificates."""

from ._cfa import (
    CfaError,
    ConvergenceError,
    InfeasibleError,
    InputError,
    NotPSDError,
    certify,
    compute_u,
    generate,
    metrics,
    mtfa,
    objective,
    pc_baseline,
    solve,
    weyl_lower_bound,
)

__all__ = [
    "CfaError",
    "ConvergenceError",
    "InfeasibleError",
    "InputError",
    "NotPSDError",
    "certify",
    "compute_u",
    "generate",
    "metrics",
    "mtfa",
    "objective",
    "pc_baseline",
    "solve",
    "weyl_lower_bound",
]
