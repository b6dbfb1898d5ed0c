"""Enumeration of the radial weights used by the virial and Morawetz monitors."""
from enum import Enum


class WeightKind(str, Enum):
    """Supported radial weight families."""
    QUADRATIC = "quadratic"
    MORAWETZ = "morawetz_f_R"
    BLOWUP = "blowup_b_R"
    BUMP = "bump_psi_R"
