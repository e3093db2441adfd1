"""Radial distance weighted discrimination: spherical-boundary classification
for high-dimension, low-sample-size data on the unit simplex."""

from .core import (ZERO_VECTOR, DimensionMismatch, InvalidTrainingSet, NegativeEntry,
                   RdwdError, ScoredSample, SphereModel, TrainingSet, classify,
                   classify_many, is_zero_sentinel, l1_normalize, l1_normalize_rows,
                   score_counts, signed_distance)
from .rdwd import (DegenerateCenter, DegeneratePoint, DualCertificate, EmptyPositiveClass,
                   FitError, MaxItersExceeded, RdwdConfig, ZeroRadiusWarning,
                   default_penalty, default_weights, dual_diagnostics, fit,
                   initialize_center, kkt_check, reduce_qr)
from .baselines import HyperplaneModel, ZeroDirection, cv_penalty, ldwd_fit, md_fit
from .simlab import (DirichletParams, ErrorTable, ExperimentScenario, run_scenario,
                     sample_dirichlet, simulation_one)
from .socp import ConeSpec, ConicProgram, ConicSolution, Nonneg, SecondOrder, Status, solve

__version__ = "1.0.0"

__all__ = [
    "ZERO_VECTOR", "DimensionMismatch", "InvalidTrainingSet", "NegativeEntry", "RdwdError",
    "ScoredSample", "SphereModel", "TrainingSet", "classify", "classify_many",
    "is_zero_sentinel", "l1_normalize", "l1_normalize_rows", "score_counts",
    "signed_distance", "DegenerateCenter", "DegeneratePoint", "DualCertificate",
    "EmptyPositiveClass", "FitError", "MaxItersExceeded", "RdwdConfig",
    "ZeroRadiusWarning", "default_penalty", "default_weights", "dual_diagnostics", "fit",
    "initialize_center", "kkt_check", "reduce_qr", "HyperplaneModel", "ZeroDirection",
    "cv_penalty", "ldwd_fit", "md_fit", "DirichletParams", "ErrorTable",
    "ExperimentScenario", "run_scenario", "sample_dirichlet", "simulation_one",
    "ConeSpec", "ConicProgram", "ConicSolution", "Nonneg", "SecondOrder", "Status", "solve",
]
