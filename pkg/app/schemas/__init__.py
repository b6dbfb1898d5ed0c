"""Pydantic schemas for parameters, records and experiment configuration."""
from app.schemas.experiment import ExperimentConfig
from app.schemas.params import PhysParams
from app.schemas.records import (
    RECORD_COLUMNS,
    CheckResult,
    CoercivityReport,
    DichotomyRow,
    FunctionalRecord,
    GroundStateSummary,
    MonitorReport,
    Prediction,
    TerminationReason,
    ThresholdClassification,
    VanishingPoint,
    Verdict,
)

__all__ = [
    "ExperimentConfig",
    "PhysParams",
    "RECORD_COLUMNS",
    "CheckResult",
    "CoercivityReport",
    "DichotomyRow",
    "FunctionalRecord",
    "GroundStateSummary",
    "MonitorReport",
    "Prediction",
    "TerminationReason",
    "ThresholdClassification",
    "VanishingPoint",
    "Verdict",
]
