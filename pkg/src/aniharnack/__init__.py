"""Numerical toolkit for degenerate anisotropic fully nonlinear elliptic inequalities.

Pucci calculus, intrinsic cubes, the explicit anisotropic barrier, the sliding
anisotropic paraboloid, a relaxation grid solver and the experiment harness
that measures doubling, level-set decay and Harnack constants on solved fields.
"""

from aniharnack.errors import (
    DomainError,
    ExperimentError,
    HypothesisNotMet,
    InfeasibleError,
    NonConvergenceError,
    NumericalError,
    UsageError,
)
from aniharnack.exponents import ConditionReport, ExponentData, alpha_beta, check_condition, harmonic_mean

__all__ = [
    "ConditionReport",
    "DomainError",
    "ExperimentError",
    "ExponentData",
    "HypothesisNotMet",
    "InfeasibleError",
    "NonConvergenceError",
    "NumericalError",
    "UsageError",
    "alpha_beta",
    "check_condition",
    "harmonic_mean",
]
