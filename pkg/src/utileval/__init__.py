"""Evaluate and rank binary classifiers by utility yield.

The yield ``sum_ij U_ij C_ij`` of a normalized confusion matrix ``C`` under a
utility matrix ``U`` is the ranking criterion; popular metrics are compared
against it by Monte Carlo simulation and by a compliance test.
"""
from .core import (
    ClassDistribution,
    ConfusionMatrix,
    UtilityCoordinates,
    UtilityMatrix,
    UtilityMixture,
    affine_transform,
    coords_to_matrix,
    expected_utility_matrix,
    matrix_to_coords,
    normalize_utilities,
    optimal_class,
    utility_yield,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateProblemError,
    InfeasibleError,
    InputError,
    InvalidScaleError,
    SamplerError,
    UndefinedMetricError,
    UtilEvalError,
)
from .metrics import REGISTRY, get_metric, yield_as_metric

__version__ = "0.1.0"

__all__ = [
    "ClassDistribution",
    "ConfusionMatrix",
    "UtilityCoordinates",
    "UtilityMatrix",
    "UtilityMixture",
    "affine_transform",
    "coords_to_matrix",
    "expected_utility_matrix",
    "matrix_to_coords",
    "normalize_utilities",
    "optimal_class",
    "utility_yield",
    "REGISTRY",
    "get_metric",
    "yield_as_metric",
    "ConfigError",
    "ContractViolation",
    "DegenerateProblemError",
    "InfeasibleError",
    "InputError",
    "InvalidScaleError",
    "SamplerError",
    "UndefinedMetricError",
    "UtilEvalError",
]
