"""Probability-graph correction of preparation and measurement errors."""

from __future__ import annotations

from .graph import (FIXED, PARAMETERS, GraphError, MeanModel, PathModel, ProbGraph, Weight, ZeroDenominatorError,
                    build_graph, outcome_distribution, path_model)
from .solve import (CorrectionResult, Measurement, MeasurementSystem, NonConvergenceError, SingularJacobianError,
                    corner_uncertainty, solve)

__all__ = [
    "FIXED", "PARAMETERS", "GraphError", "MeanModel", "PathModel", "ProbGraph", "Weight", "ZeroDenominatorError",
    "build_graph", "outcome_distribution", "path_model", "CorrectionResult", "Measurement", "MeasurementSystem",
    "NonConvergenceError", "SingularJacobianError", "corner_uncertainty", "solve",
]
