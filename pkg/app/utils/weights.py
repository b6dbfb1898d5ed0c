"""Factory of piecewise-polynomial radial weights b(|x|) and their derivatives."""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Type

import numpy as np
from numpy.polynomial import Polynomial

from app.exceptions import ConfigError
from app.models.grid import PolarGrid
from app.schemas.weights import WeightKind

# Derivative orders carried by every sample: b, b', b'', b''', b''''.
ORDERS = 5


@dataclass(frozen=True, eq=False)
class WeightSamples:
    """
    A weight sampled on a grid.

    Node arrays hold b, b', b'', b'/r, the Laplacian and the bilaplacian; ``face_d2``
    holds b'' on the outer cell faces where radial differences live.
    """
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    angular: np.ndarray
    laplacian: np.ndarray
    bilaplacian: np.ndarray
    face_d2: np.ndarray


class RadialWeight(ABC):
    """
    Radial weight w_R(r) = R^k w(r/R) built from polynomial pieces of the unit profile w.

    Subclasses list the pieces of w on [start, end) as polynomials in t = x - start.
    """
    kind: WeightKind
    scale_power: int = 2

    def __init__(self, radius: float = 1.0):
        if not (math.isfinite(radius) and radius > 0.0):
            raise ConfigError(f"Weight radius must be positive, got {radius}")
        self.radius = float(radius)

    @abstractmethod
    def unit_pieces(self) -> list[tuple[float, Polynomial]]:
        """
        Pieces of the unit profile.

        Returns:
            List of (start, polynomial in x - start) sorted by start; the first start is 0
        """
        pass

    def derivatives(self, r: np.ndarray) -> np.ndarray:
        """
        Derivatives of w_R at radii r.

        Returns:
            Array of shape (5, len(r)) holding w_R, w_R', ..., w_R''''
        """
        r = np.asarray(r, dtype=float)
        x = r / self.radius
        out = np.zeros((ORDERS, r.size))
        pieces = self.unit_pieces()
        starts = [start for start, _ in pieces] + [math.inf]
        for (start, poly), end in zip(pieces, starts[1:]):
            mask = (x >= start) & (x < end)
            if not np.any(mask):
                continue
            t = x[mask] - start
            for order in range(ORDERS):
                out[order, mask] = poly.deriv(order)(t) if order else poly(t)
        scale = self.radius ** (self.scale_power - np.arange(ORDERS))
        return out * scale[:, None]

    def sample(self, grid: PolarGrid) -> WeightSamples:
        """Sample the weight and the radial operators applied to it on the grid."""
        r = grid.nodes
        b, d1, d2, d3, d4 = self.derivatives(r)
        face_d2 = self.derivatives(grid.faces)[2]
        return WeightSamples(
            value=b,
            d1=d1,
            d2=d2,
            angular=d1 / r,
            laplacian=d2 + d1 / r,
            bilaplacian=d4 + 2.0 * d3 / r - d2 / r**2 + d1 / r**3,
            face_d2=face_d2,
        )


class QuadraticWeight(RadialWeight):
    """b = |x|^2 (the radius is ignored)."""
    kind = WeightKind.QUADRATIC

    def __init__(self, radius: float = 1.0):
        super().__init__(1.0)

    def unit_pieces(self):
        return [(0.0, Polynomial([0.0, 0.0, 1.0]))]


class MorawetzWeight(RadialWeight):
    """
    f_R: r^2 inside R, a quintic bridge on [R, 2R], then 3Rr - 2.3R^2.

    The bridge has f'' = 2(1 - s)^2(1 + 2s) >= 0 with s = r/R - 1.
    """
    kind = WeightKind.MORAWETZ

    def unit_pieces(self):
        return [
            (0.0, Polynomial([0.0, 0.0, 1.0])),
            (1.0, Polynomial([1.0, 2.0, 1.0, 0.0, -0.5, 0.2])),
            (2.0, Polynomial([3.7, 3.0])),
        ]


class BlowupWeight(RadialWeight):
    """
    b_R(r) = R^2 b(r/R) with b = r^2/2 on [0, 1], constant beyond 2.

    On the bridge b'' = (1 - t)^2 (1 + 2t - 45t^2) with t = r - 1, so b'' <= 1 and b' <= r.
    """
    kind = WeightKind.BLOWUP

    def unit_pieces(self):
        return [
            (0.0, Polynomial([0.0, 0.0, 0.5])),
            (1.0, Polynomial([0.5, 1.0, 0.5, 0.0, -4.0, 4.6, -1.5])),
            (2.0, Polynomial([1.1])),
        ]


class BumpWeight(RadialWeight):
    """psi_R: 1 on B(R/2), 0 outside B(R), quintic smoothstep in between."""
    kind = WeightKind.BUMP
    scale_power = 0

    def unit_pieces(self):
        # 1 - smoothstep(s) with s = 2t, t = x - 1/2
        smooth = Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
        return [
            (0.0, Polynomial([1.0])),
            (0.5, 1.0 - smooth(Polynomial([0.0, 2.0]))),
            (1.0, Polynomial([0.0])),
        ]


class WeightFactory:
    """Registry mapping weight kinds to their classes."""

    _weights: Dict[WeightKind, Type[RadialWeight]] = {
        WeightKind.QUADRATIC: QuadraticWeight,
        WeightKind.MORAWETZ: MorawetzWeight,
        WeightKind.BLOWUP: BlowupWeight,
        WeightKind.BUMP: BumpWeight,
    }

    @classmethod
    def create_weight(cls, kind: WeightKind | str, radius: float = 1.0) -> RadialWeight:
        """
        Create a weight instance.

        Args:
            kind: Weight kind or its string value
            radius: Radius parameter R

        Returns:
            Instance of the matching weight class

        Raises:
            ConfigError: If the kind is not supported
        """
        try:
            kind = WeightKind(kind)
        except ValueError as e:
            raise ConfigError(f"Unsupported weight kind: {kind}") from e
        return cls._weights[kind](radius)

    @classmethod
    def get_supported_weights(cls) -> list[str]:
        return [kind.value for kind in cls._weights]
