"""Pydantic schema for a complete experiment configuration."""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.params import PhysParams


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Section):
    """Polar grid dimensions."""
    n_r: int = Field(2048, description="Radial node count")
    r_max: float = Field(16.0, gt=0.0, description="Domain truncation radius")
    n_modes: int = Field(1, description="Odd number of angular modes")

    @field_validator("n_r")
    @classmethod
    def validate_n_r(cls, v):
        """Grid sizes must be positive; small grids are rejected later by make_grid."""
        if v <= 0:
            raise ValueError("n_r must be positive")
        return v

    @field_validator("n_modes")
    @classmethod
    def validate_n_modes(cls, v):
        """Angular mode count must be a positive odd integer."""
        if v < 1 or v % 2 == 0:
            raise ValueError("n_modes must be a positive odd integer")
        return v


class EvolveSection(_Section):
    """Time-stepping controls."""
    dt: float = Field(1e-3, gt=0.0, description="Base time step")
    t_end: float = Field(1.0, ge=0.0, description="Final time")
    adapt: bool = Field(True, description="Shrink dt as the gradient grows")
    dt_floor: float = Field(1e-7, gt=0.0, description="Smallest admissible dt")
    gradient_cap_factor: float = Field(
        4.0, gt=1.0, description="Stop once the gradient norm exceeds this multiple of its initial value"
    )
    record_every: int = Field(10, ge=1, description="Steps between functional records")
    snapshot_times: list[float] = Field(default_factory=list, description="Times of field dumps")

    @field_validator("snapshot_times", mode="before")
    @classmethod
    def validate_snapshot_times(cls, v):
        """A single time may be given without brackets."""
        if v is None:
            return []
        if isinstance(v, (int, float, str)):
            return [v]
        return v

    @model_validator(mode="after")
    def validate_floor(self):
        """The floor must lie strictly below the base step."""
        if self.dt_floor >= self.dt:
            raise ValueError("dt_floor must be smaller than dt")
        return self


class GroundStateSection(_Section):
    """Weinstein descent controls."""
    tol: float = Field(1e-12, gt=0.0, description="Relative J-decrease stopping tolerance")
    max_iters: int = Field(5000, ge=1, description="Iteration limit")
    seed: Literal["gaussian", "plateau"] = Field("gaussian", description="Seed profile kind")
    validation: bool = Field(False, description="Allow parameters outside the theory regime")


class DiagnosticsSection(_Section):
    """Monitor parameters."""
    scatter_radius: float = Field(1.0, gt=0.0, description="Ball radius R of the leak criterion")
    scatter_epsilon: Optional[float] = Field(None, gt=0.0, description="Leak tolerance epsilon")
    leak_fraction: float = Field(0.5, gt=0.0, lt=1.0, description="Default epsilon^2 as a fraction of the initial ball mass")
    blowup_radius: float = Field(4.0, gt=0.0, description="Radius R of the localized virial driver")
    threshold_tol: float = Field(1e-6, ge=0.0, description="Band around EM = 1 and GM = 1")
    check_fields: int = Field(100, ge=1, description="Random fields in the inequality battery")


class OutputSection(_Section):
    """Where and what to write."""
    directory: str = Field("results", description="Output directory")
    formats: list[Literal["csv", "json"]] = Field(
        default_factory=lambda: ["csv", "json"],
        description="Artifact formats to write; manifest.json is always written",
    )

    @field_validator("formats", mode="before")
    @classmethod
    def validate_formats(cls, v):
        """A single format may be given without brackets."""
        if v is None:
            return []
        if isinstance(v, str):
            return [v]
        return v


class ExperimentConfig(_Section):
    """
    Everything needed to reproduce a run.

    Identical configurations (including rng_seed) produce byte-identical outputs.
    """
    params: PhysParams = Field(default_factory=PhysParams)
    grid: GridSection = Field(default_factory=GridSection)
    evolve: EvolveSection = Field(default_factory=EvolveSection)
    groundstate: GroundStateSection = Field(default_factory=GroundStateSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)
    output: OutputSection = Field(default_factory=OutputSection)
    rng_seed: int = Field(20240607, ge=0, description="Seed for every random draw")

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "params": {"alpha": 0.5, "rho": 0.5, "p": 3.0, "kappa": -1},
                "grid": {"n_r": 2048, "r_max": 16.0, "n_modes": 1},
                "rng_seed": 20240607,
            }
        },
    )
