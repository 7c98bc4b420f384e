"""Spatiotemporal evaluation, planning strategies and evolutionary
optimization for multi-day travel itineraries."""

from .model import (
    ConstraintKind,
    DatasetInstance,
    EvaluationReport,
    Plan,
    PlanEntry,
    Poi,
    Query,
    TimeWindow,
    Trajectory,
    validate_plan,
)

__all__ = [
    "ConstraintKind",
    "DatasetInstance",
    "EvaluationReport",
    "Plan",
    "PlanEntry",
    "Poi",
    "Query",
    "TimeWindow",
    "Trajectory",
    "validate_plan",
]
