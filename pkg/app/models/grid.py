"""Polar grid, complex fields and their angular-mode representation."""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from app.exceptions import ConfigError, GridMismatchError

logger = logging.getLogger(__name__)

MIN_RADIAL_NODES = 8


@dataclass(frozen=True)
class PolarGrid:
    """
    Staggered radial nodes times an equispaced angular ring.

    Attributes:
        n_r: Number of radial nodes, r_j = (j + 1/2) h
        r_max: Outer radius carrying the Dirichlet condition
        n_modes: Odd number of angular modes, also the number of angles
    """
    n_r: int
    r_max: float
    n_modes: int

    @property
    def h(self) -> float:
        return self.r_max / self.n_r

    @property
    def n_theta(self) -> int:
        return self.n_modes

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.h

    @cached_property
    def faces(self) -> np.ndarray:
        """Outer cell faces r_{j+1/2}; the last one is r_max."""
        return (np.arange(self.n_r) + 1.0) * self.h

    @cached_property
    def weights(self) -> np.ndarray:
        return 2.0 * math.pi * self.nodes * self.h

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT column order (0, 1, ..., M, -M, ..., -1)."""
        return np.rint(np.fft.fftfreq(self.n_theta, d=1.0 / self.n_theta)).astype(int)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    def mode_index(self, m: int) -> int:
        """Column holding mode m."""
        half = self.n_modes // 2
        if abs(m) > half:
            raise GridMismatchError(f"Mode {m} is outside the resolved range [-{half}, {half}]")
        return m % self.n_theta

    def dilated(self, mu: float) -> "PolarGrid":
        """The grid seen by x -> mu x: same node count, radius r_max / mu."""
        if not mu > 0.0:
            raise ConfigError(f"Dilation must be positive, got {mu}")
        return PolarGrid(self.n_r, self.r_max / mu, self.n_modes)

    def require_same(self, other: "PolarGrid") -> None:
        """Raise GridMismatchError unless both grids are identical."""
        if (self.n_r, self.r_max, self.n_modes) != (other.n_r, other.r_max, other.n_modes):
            raise GridMismatchError(f"Grid mismatch: {self} vs {other}")


def make_grid(n_r: int, r_max: float, n_modes: int) -> PolarGrid:
    """
    Build a polar grid.

    Args:
        n_r: Radial node count, at least 8
        r_max: Positive truncation radius
        n_modes: Positive odd angular mode count

    Returns:
        PolarGrid with staggered radial nodes

    Raises:
        ConfigError: If any size is invalid
    """
    if int(n_r) != n_r or n_r < MIN_RADIAL_NODES:
        raise ConfigError(f"n_r must be an integer >= {MIN_RADIAL_NODES}, got {n_r}")
    if not (math.isfinite(r_max) and r_max > 0.0):
        raise ConfigError(f"r_max must be positive, got {r_max}")
    if int(n_modes) != n_modes or n_modes < 1 or n_modes % 2 == 0:
        raise ConfigError(f"n_modes must be a positive odd integer, got {n_modes}")
    return PolarGrid(int(n_r), float(r_max), int(n_modes))


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=complex)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples u(r_j, theta_k) on a polar grid (read-only)."""
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == 1 and self.grid.n_theta == 1:
            values = values[:, None]
        if values.shape != self.grid.shape:
            raise GridMismatchError(f"Field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("Field values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def radial(cls, grid: PolarGrid, profile: np.ndarray, mode: int = 0) -> "Field":
        """Field g(r) e^{i m theta} from a radial profile."""
        profile = np.asarray(profile)
        if profile.shape != (grid.n_r,):
            raise GridMismatchError(f"Profile length {profile.shape} does not match n_r={grid.n_r}")
        grid.mode_index(mode)
        return cls(grid, np.outer(profile, np.exp(1j * mode * grid.theta)))

    @classmethod
    def zeros(cls, grid: PolarGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def scaled(self, c: complex) -> "Field":
        return Field(self.grid, c * self.values)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass(frozen=True, eq=False)
class ModeStack:
    """Per-mode radial coefficients g_m(r_j); column k holds mode grid.modes[k]."""
    grid: PolarGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if coeffs.shape != self.grid.shape:
            raise GridMismatchError(f"Mode stack shape {coeffs.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _frozen(coeffs))

    def mode(self, m: int) -> np.ndarray:
        return self.coeffs[:, self.grid.mode_index(m)]


def analyze(f: Field) -> ModeStack:
    """Angular DFT at every radial node: u = sum_m g_m(r) e^{i m theta}."""
    return ModeStack(f.grid, np.fft.fft(f.values, axis=1) / f.grid.n_theta)


def synthesize(s: ModeStack) -> Field:
    """Exact inverse of analyze."""
    return Field(s.grid, np.fft.ifft(s.coeffs, axis=1) * s.grid.n_theta)


def integrate(samples, grid: PolarGrid, mode_space: bool = False):
    """
    Midpoint rule in r, trapezoid rule in theta.

    Args:
        samples: Radial samples (n_r,) or grid samples (n_r, n_theta)
        grid: Grid the samples live on
        mode_space: Treat columns as per-mode values and sum them without 1/n_theta

    Returns:
        Scalar approximation of the integral over the disk

    Raises:
        GridMismatchError: If the sample shape does not fit the grid
    """
    samples = np.asarray(samples)
    if samples.shape == (grid.n_r,):
        return np.dot(grid.weights, samples)
    if samples.shape != grid.shape:
        raise GridMismatchError(f"Sample shape {samples.shape} does not match grid {grid.shape}")
    per_node = samples.sum(axis=1)
    if not mode_space:
        per_node = per_node / grid.n_theta
    return np.dot(grid.weights, per_node)


def transfer_profile(profile: np.ndarray, source: PolarGrid, target: PolarGrid) -> np.ndarray:
    """
    Resample a radial profile onto another grid.

    Cubic spline on the source nodes; zero beyond the source support.
    """
    spline = CubicSpline(source.nodes, profile, extrapolate=True)
    out = spline(target.nodes)
    out[target.nodes >= source.r_max] = 0.0
    return out
