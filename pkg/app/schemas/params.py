"""Pydantic schema for the physical parameters (alpha, rho, p, kappa)."""
import math

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

# Relative tolerance for recognising the mass-critical power p = 3 - rho.
MASS_CRITICAL_TOL = 1e-12


class PhysParams(BaseModel):
    """
    The quadruple defining the equation plus its derived constants.

    Attributes:
        alpha: Aharonov-Bohm flux (non-integer in the theory regime)
        rho: Inhomogeneity exponent, 0 <= rho < 2 (rho = 0 is validation only)
        p: Nonlinearity power, p > 1
        kappa: +1 defocusing, -1 focusing
    """

    alpha: float = Field(0.5, description="Aharonov-Bohm flux")
    rho: float = Field(0.5, ge=0.0, lt=2.0, description="Inhomogeneity exponent")
    p: float = Field(3.0, gt=1.0, description="Nonlinearity power")
    kappa: int = Field(-1, description="+1 defocusing, -1 focusing")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"alpha": 0.5, "rho": 0.5, "p": 3.0, "kappa": -1}
        },
    )

    @field_validator("alpha", "rho", "p")
    @classmethod
    def validate_finite(cls, v):
        """Reject NaN and infinite parameters."""
        if not math.isfinite(v):
            raise ValueError("Parameters must be finite")
        return v

    @field_validator("kappa")
    @classmethod
    def validate_kappa(cls, v):
        """kappa is a sign."""
        if v not in (-1, 1):
            raise ValueError("kappa must be +1 or -1")
        return v

    @computed_field
    @property
    def big_b(self) -> float:
        """B = p - 1 + rho."""
        return self.p - 1.0 + self.rho

    @computed_field
    @property
    def big_a(self) -> float:
        """A = 1 + p - B = 2 - rho."""
        return 1.0 + self.p - self.big_b

    @computed_field
    @property
    def s_c(self) -> float:
        """Critical Sobolev index 1 - (2 - rho)/(p - 1)."""
        return 1.0 - (2.0 - self.rho) / (self.p - 1.0)

    @computed_field
    @property
    def mass_critical(self) -> bool:
        """True when p = 3 - rho."""
        return abs(self.p + self.rho - 3.0) <= MASS_CRITICAL_TOL * max(1.0, self.p)

    @computed_field
    @property
    def lambda_c(self) -> float | None:
        """(2 - rho)/(p + rho - 3); None at the mass-critical power."""
        if self.mass_critical:
            return None
        return (2.0 - self.rho) / (self.p + self.rho - 3.0)

    @computed_field
    @property
    def dist_alpha(self) -> float:
        """Distance from alpha to the nearest integer."""
        return abs(self.alpha - round(self.alpha))

    @computed_field
    @property
    def theory_regime(self) -> bool:
        """alpha not an integer, 0 < rho < 1 and p > 3 - rho."""
        return (
            self.dist_alpha > 0.0
            and 0.0 < self.rho < 1.0
            and self.p > 3.0 - self.rho
            and not self.mass_critical
        )

    def same_equation(self, other: "PhysParams") -> bool:
        """True when alpha, rho and p agree (kappa may differ)."""
        return (self.alpha, self.rho, self.p) == (other.alpha, other.rho, other.p)
