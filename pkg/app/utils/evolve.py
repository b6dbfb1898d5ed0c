"""Strang-split time integration: pointwise nonlinear phase plus per-mode Crank-Nicolson."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from app.exceptions import ConfigError
from app.models.grid import Field, ModeStack, PolarGrid
from app.schemas.experiment import EvolveSection
from app.schemas.params import PhysParams
from app.schemas.records import FunctionalRecord, TerminationReason
from app.utils.functionals import functional_record
from app.utils.magop import quadratic_form, stiffness_bands

logger = logging.getLogger(__name__)

Monitor = Callable[[FunctionalRecord, Field], None]


@dataclass
class EvolveConfig:
    """
    Time-stepping controls for run().

    Attributes:
        dt: Base time step
        t_end: Final time
        adapt: Shrink dt like ||nabla u(0)||^2 / ||nabla u||^2
        dt_floor: Stop cleanly once dt would drop below this
        gradient_cap: Stop once ||nabla u|| exceeds this
        record_every: Steps between functional records
        monitors: Hooks called with every record and its field
        snapshot_times: Times at which the field is kept
    """
    dt: float
    t_end: float
    adapt: bool = True
    dt_floor: float = 1e-7
    gradient_cap: float = math.inf
    record_every: int = 10
    monitors: list[Monitor] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.dt_floor < self.dt:
            raise ConfigError("dt_floor must be smaller than dt")
        if self.t_end < 0.0:
            raise ConfigError("t_end must be non-negative")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")

    @classmethod
    def from_section(cls, section: EvolveSection, initial_gradient: float, **kwargs) -> "EvolveConfig":
        """Build from the config section; the cap is a multiple of the initial gradient norm."""
        return cls(
            dt=section.dt,
            t_end=section.t_end,
            adapt=section.adapt,
            dt_floor=section.dt_floor,
            gradient_cap=section.gradient_cap_factor * initial_gradient,
            record_every=section.record_every,
            snapshot_times=list(section.snapshot_times),
            **kwargs,
        )


@dataclass
class RadialDensities:
    """Angle-integrated mass and potential contributions of every radial node at one record."""
    t: float
    mass: np.ndarray
    potential: np.ndarray


@dataclass
class Trajectory:
    """Functional records in strictly increasing time plus the reason the run stopped."""
    records: list[FunctionalRecord] = field(default_factory=list)
    densities: list[RadialDensities] = field(default_factory=list)
    snapshots: dict[float, Field] = field(default_factory=dict)
    termination: TerminationReason = TerminationReason.COMPLETED
    final: Optional[Field] = None

    def append(self, record: FunctionalRecord, densities: RadialDensities) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("Trajectory times must increase strictly")
        self.records.append(record)
        self.densities.append(densities)

    @property
    def times(self) -> np.ndarray:
        return np.array([rec.t for rec in self.records])

    def column(self, name: str) -> np.ndarray:
        """One FunctionalRecord attribute across all records (None becomes NaN)."""
        return np.array([getattr(rec, name) if getattr(rec, name) is not None else np.nan for rec in self.records])


def _phase(values: np.ndarray, dt: float, params: PhysParams, grid: PolarGrid) -> np.ndarray:
    amplitude = np.abs(values) ** (params.p - 1.0)
    return values * np.exp(-1j * params.kappa * dt * grid.nodes[:, None] ** (-params.rho) * amplitude)


def nonlinear_phase(u: Field, dt: float, params: PhysParams, grid: PolarGrid) -> Field:
    """
    Exact flow of i u_t = kappa |x|^{-rho} |u|^{p-1} u over time dt.

    Raises:
        ValueError: If the phase overflows to non-finite values
    """
    grid.require_same(u.grid)
    return Field(grid, _phase(u.values, dt, params, grid))


class LinearPropagator:
    """
    Crank-Nicolson map (W + i dt/2 S_m)^{-1} (W - i dt/2 S_m) for every mode.

    Bands are rebuilt whenever dt changes.
    """

    def __init__(self, params: PhysParams, grid: PolarGrid):
        self.grid = grid
        self.diag, self.offdiag = stiffness_bands(grid, params.alpha)
        self.weights = grid.weights
        self._dt = None
        self._banded = None

    def _prepare(self, dt: float) -> None:
        if dt == self._dt:
            return
        half = 0.5j * dt
        n_r, n_modes = self.diag.shape
        banded = np.zeros((n_modes, 3, n_r), dtype=complex)
        banded[:, 0, 1:] = half * self.offdiag
        banded[:, 1, :] = (self.weights[:, None] + half * self.diag).T
        banded[:, 2, :-1] = half * self.offdiag
        self._banded = banded
        self._dt = dt

    def apply(self, coeffs: np.ndarray, dt: float) -> np.ndarray:
        self._prepare(dt)
        half = 0.5j * dt
        rhs = (self.weights[:, None] - half * self.diag) * coeffs
        rhs[:-1] -= half * self.offdiag[:, None] * coeffs[1:]
        rhs[1:] -= half * self.offdiag[:, None] * coeffs[:-1]
        out = np.empty_like(rhs)
        for k in range(coeffs.shape[1]):
            out[:, k] = solve_banded((1, 1), self._banded[k], rhs[:, k], check_finite=False)
        return out


def linear_step(s: ModeStack, dt: float, params: PhysParams, grid: PolarGrid) -> ModeStack:
    """
    One Crank-Nicolson step of i u_t = K_alpha u in mode space.

    Raises:
        GridMismatchError: If the stack lives on another grid
    """
    grid.require_same(s.grid)
    return ModeStack(grid, LinearPropagator(params, grid).apply(np.array(s.coeffs), dt))


def _strang(values: np.ndarray, dt: float, params: PhysParams, grid: PolarGrid, propagator: LinearPropagator) -> np.ndarray:
    half = _phase(values, 0.5 * dt, params, grid)
    coeffs = np.fft.fft(half, axis=1) / grid.n_theta
    coeffs = propagator.apply(coeffs, dt)
    linear = np.fft.ifft(coeffs, axis=1) * grid.n_theta
    return _phase(linear, 0.5 * dt, params, grid)


def strang_step(u: Field, dt: float, params: PhysParams, grid: PolarGrid) -> Field:
    """Half nonlinear phase, full linear step, half nonlinear phase."""
    grid.require_same(u.grid)
    return Field(grid, _strang(u.values, dt, params, grid, LinearPropagator(params, grid)))


def _gradient_norm(values: np.ndarray, grid: PolarGrid) -> float:
    return math.sqrt(quadratic_form(ModeStack(grid, np.fft.fft(values, axis=1) / grid.n_theta), 0.0))


def _densities(values: np.ndarray, t: float, params: PhysParams, grid: PolarGrid) -> RadialDensities:
    abs_u = np.abs(values)
    mass = grid.weights * np.mean(abs_u**2, axis=1)
    pot = grid.weights * grid.nodes ** (-params.rho) * np.mean(abs_u ** (params.p + 1.0), axis=1)
    return RadialDensities(t=t, mass=mass, potential=pot)


def run(u0: Field, config: EvolveConfig, params: PhysParams, grid: PolarGrid, gs=None) -> Trajectory:
    """
    Evolve u0 until t_end or a termination trigger.

    Args:
        u0: Initial field
        config: Step controls and monitors
        params: Physical parameters
        grid: Grid of u0
        gs: Optional ground state; when given, records carry EM, GM, PM

    Returns:
        Trajectory whose termination reason says why it stopped

    Raises:
        GridMismatchError: If u0 lives on another grid
        ConfigError: If the gradient cap does not exceed the initial gradient norm
    """
    grid.require_same(u0.grid)
    propagator = LinearPropagator(params, grid)
    values = np.array(u0.values)
    grad0 = _gradient_norm(values, grid)
    if not config.gradient_cap > grad0:
        raise ConfigError(f"gradient_cap {config.gradient_cap} must exceed the initial gradient norm {grad0}")
    snapshots = sorted(t for t in config.snapshot_times if 0.0 < t <= config.t_end)

    trajectory = Trajectory()
    t = 0.0
    dt = config.dt
    steps = 0

    def emit(current: np.ndarray, time: float, step_dt: Optional[float]) -> None:
        snapshot = Field(grid, current)
        record = functional_record(snapshot, params, grid, t=time, gs=gs, dt=step_dt)
        trajectory.append(record, _densities(current, time, params, grid))
        logger.debug("t=%.6g M=%.15g E=%.15g", time, record.mass, record.energy)
        for monitor in config.monitors:
            monitor(record, snapshot)

    emit(values, t, None)
    last_recorded = 0
    while t < config.t_end:
        if config.adapt:
            grad = _gradient_norm(values, grid)
            dt = config.dt * min(1.0, (grad0 / grad) ** 2) if grad > 0.0 else config.dt
            if dt < config.dt_floor:
                trajectory.termination = TerminationReason.DT_FLOOR_HIT
                break
        stop = config.t_end
        if snapshots:
            stop = min(stop, snapshots[0])
        step_dt = min(dt, stop - t)
        updated = _strang(values, step_dt, params, grid, propagator)
        if not np.all(np.isfinite(updated)):
            trajectory.termination = TerminationReason.NAN_DETECTED
            break
        values = updated
        t = stop if step_dt == stop - t else t + step_dt
        steps += 1
        if snapshots and t >= snapshots[0]:
            trajectory.snapshots[snapshots.pop(0)] = Field(grid, values)
        if steps % config.record_every == 0:
            emit(values, t, step_dt)
            last_recorded = steps
        if _gradient_norm(values, grid) > config.gradient_cap:
            trajectory.termination = TerminationReason.GRADIENT_CAP_HIT
            break
    if steps != last_recorded:
        emit(values, t, step_dt)
    trajectory.final = Field(grid, values)
    if trajectory.termination is TerminationReason.COMPLETED:
        logger.info("Evolution completed at t=%.6g after %d steps", t, steps)
    else:
        logger.warning("Evolution stopped at t=%.6g after %d steps: %s", t, steps, trajectory.termination.value)
    return trajectory


def max_relative_drift(values: np.ndarray) -> float:
    """max_t |x(t) - x(0)| / |x(0)|."""
    values = np.asarray(values)
    return float(np.max(np.abs(values - values[0])) / abs(values[0]))


def evolve_fixed(u0: Field, dt: float, t_end: float, params: PhysParams, grid: PolarGrid) -> Field:
    """Fixed-step Strang evolution to t_end, without records."""
    propagator = LinearPropagator(params, grid)
    steps = int(round(t_end / dt))
    values = np.array(u0.values)
    for _ in range(steps):
        values = _strang(values, dt, params, grid, propagator)
    return Field(grid, values)


def self_convergence_order(u0: Field, dt: float, t_end: float, params: PhysParams, grid: PolarGrid) -> float:
    """log2(||u_dt - u_dt/2|| / ||u_dt/2 - u_dt/4||) in discrete L^2."""
    coarse = evolve_fixed(u0, dt, t_end, params, grid).values
    mid = evolve_fixed(u0, dt / 2.0, t_end, params, grid).values
    fine = evolve_fixed(u0, dt / 4.0, t_end, params, grid).values

    def l2(diff: np.ndarray) -> float:
        return math.sqrt(np.dot(grid.weights, np.mean(np.abs(diff) ** 2, axis=1)))

    return math.log2(l2(coarse - mid) / l2(mid - fine))


def dispersive_decay_slope(
    u0: Field,
    dt: float,
    window: tuple[float, float],
    params: PhysParams,
    grid: PolarGrid,
) -> float:
    """
    Fitted slope of log ||u(t)||_inf against log t under the linear flow alone.

    Raises:
        GridMismatchError: If u0 lives on another grid
    """
    grid.require_same(u0.grid)
    propagator = LinearPropagator(params, grid)
    coeffs = np.fft.fft(u0.values, axis=1) / grid.n_theta
    t_start, t_stop = window
    steps = int(round(t_stop / dt))
    times, peaks = [], []
    for n in range(1, steps + 1):
        coeffs = propagator.apply(coeffs, dt)
        t = n * dt
        if t >= t_start - 1e-12:
            times.append(t)
            peaks.append(np.max(np.abs(np.fft.ifft(coeffs, axis=1) * grid.n_theta)))
    slope, _ = np.polyfit(np.log(times), np.log(peaks), 1)
    return float(slope)
