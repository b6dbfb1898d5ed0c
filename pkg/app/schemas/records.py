"""Pydantic schemas for functional records, monitor reports and run summaries."""
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.params import PhysParams


class Verdict(str, Enum):
    """Tri-state monitor verdicts, plus ``skipped`` for the check battery."""
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    SKIPPED = "skipped"


class TerminationReason(str, Enum):
    """Why an evolution stopped."""
    COMPLETED = "completed"
    GRADIENT_CAP_HIT = "gradient_cap_hit"
    DT_FLOOR_HIT = "dt_floor_hit"
    NAN_DETECTED = "nan_detected"


class Prediction(str, Enum):
    """Outcome predicted by the mass-energy threshold classifier."""
    GLOBAL_SCATTERING = "global-scattering"
    BLOWUP = "blowup"
    OUTSIDE_THEORY = "outside-theory"


# Column order is part of the CSV contract; extra columns only ever go at the end.
RECORD_COLUMNS = (
    "t", "M", "E", "P", "Q", "grad_alpha_sq", "grad_sq", "EM", "GM", "PM",
    "GM_alpha", "virial", "dt",
)
RECORD_SCHEMA_VERSION = 1


class FunctionalRecord(BaseModel):
    """
    Functionals of one field at one time.

    EM, GM, PM and GM_alpha are only set when a ground state is attached.
    """
    t: float = 0.0
    mass: float
    energy: float
    potential: float
    virial_q: float
    grad_alpha_sq: float
    grad_sq: float
    em: Optional[float] = None
    gm: Optional[float] = None
    pm: Optional[float] = None
    gm_alpha: Optional[float] = None
    virial: Optional[float] = None
    dt: Optional[float] = None

    model_config = ConfigDict(frozen=True)

    def csv_values(self) -> tuple:
        """Values in RECORD_COLUMNS order."""
        return (
            self.t, self.mass, self.energy, self.potential, self.virial_q,
            self.grad_alpha_sq, self.grad_sq, self.em, self.gm, self.pm,
            self.gm_alpha, self.virial, self.dt,
        )


class MonitorReport(BaseModel):
    """Verdict and numeric evidence produced by one diagnostic monitor."""
    name: str
    verdict: Verdict
    evidence: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)

    def one_line(self) -> str:
        """Single-line summary printed by the CLI."""
        return f"{self.name}: {self.verdict.value}"


class CoercivityReport(BaseModel):
    """Coercivity checks for a field measured against the ground state."""
    pm_margin: float = Field(..., description="epsilon = 1 - PM[u]")
    coer1_holds: bool
    coer1_bound: float
    coer2_value: float = Field(..., description="c(epsilon, B)")
    coer2_holds: bool
    coer3_holds: bool


class ThresholdClassification(BaseModel):
    """Scale-invariant ratios of initial data and the predicted dynamics."""
    em: float
    gm: float
    pm: float
    predicted: Prediction


class VanishingPoint(BaseModel):
    """One element (t_n, R_n, localized P) of the vanishing sequence."""
    t: float
    radius: float
    local_potential: float


class GroundStateSummary(BaseModel):
    """JSON sidecar of a computed ground state."""
    params: PhysParams
    n_r: int
    r_max: float
    mass: float
    grad_alpha_sq: float
    grad_sq: float
    potential: float
    energy: float
    k_opt: float
    weinstein_value: float
    amplitude: float = Field(..., description="lambda of the Pohozaev rescale")
    dilation: float = Field(..., description="mu of the Pohozaev rescale")
    pohozaev_residuals: tuple[float, float]
    euler_lagrange_residual: float
    iterations: int

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "params": {"alpha": 0.5, "rho": 0.5, "p": 3.0, "kappa": -1},
                "n_r": 2048,
                "r_max": 16.0,
                "k_opt": 0.1,
            }
        }
    )


class CheckResult(BaseModel):
    """Outcome of one invariant in the check battery."""
    name: str
    verdict: Verdict
    margin: Optional[float] = None
    detail: str = ""


class DichotomyRow(BaseModel):
    """Predicted versus observed outcome for one amplitude c."""
    c: float
    em: float
    gm: float
    pm: float
    predicted: Prediction
    termination: TerminationReason
    t_final: float
    max_gm: float
    min_gm: float
    max_gm_alpha: float
    min_gm_alpha: float
    max_q: float
    observed: Prediction
    mismatch: bool
