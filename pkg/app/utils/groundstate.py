"""Ground states by fixed-frequency Weinstein minimization and the Pohozaev rescale."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from app.exceptions import ConfigError, ConvergenceError
from app.models.grid import Field, PolarGrid, transfer_profile
from app.schemas.params import PhysParams
from app.schemas.records import GroundStateSummary, MonitorReport, Verdict
from app.utils.functionals import weinstein
from app.utils.magop import ModeOperator, mode_operator

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 40
POHOZAEV_GATE = 1e-5


def sector_mode(params: PhysParams) -> int:
    """Angular mode m with |m + alpha| = dist(alpha, Z); 0 whenever |alpha| <= 1/2."""
    return -int(round(params.alpha))


@dataclass(frozen=True)
class _RadialForms:
    """Radial-sector functionals M, G, P of a real profile."""
    op: ModeOperator
    potential_weight: np.ndarray
    p: float

    def mass(self, psi: np.ndarray) -> float:
        return float(np.dot(self.op.weights, psi**2))

    def grad(self, psi: np.ndarray) -> float:
        return float(np.dot(psi, self.op.stiffness_apply(psi)))

    def potential(self, psi: np.ndarray) -> float:
        return float(np.dot(self.op.weights * self.potential_weight, np.abs(psi) ** (self.p + 1.0)))


def _radial_forms(params: PhysParams, grid: PolarGrid) -> _RadialForms:
    return _RadialForms(
        op=mode_operator(sector_mode(params), params, grid),
        potential_weight=grid.nodes ** (-params.rho),
        p=params.p,
    )


def _weinstein_value(forms: _RadialForms, psi: np.ndarray, big_a: float, big_b: float) -> float:
    p_val = forms.potential(psi)
    if not p_val > 0.0:
        return math.inf
    return forms.mass(psi) ** (big_a / 2.0) * forms.grad(psi) ** (big_b / 2.0) / p_val


@dataclass(frozen=True, eq=False)
class GroundState:
    """
    Radial profile phi of K_alpha phi + phi = |x|^{-rho} phi^p with cached functionals.

    The profile lives on ``grid``, the minimizer grid dilated by 1/dilation.
    """
    params: PhysParams
    grid: PolarGrid
    profile: np.ndarray
    mass: float
    grad_alpha_sq: float
    grad_sq: float
    potential: float
    energy: float
    k_opt: float
    weinstein_value: float
    amplitude: float = 1.0
    dilation: float = 1.0
    iterations: int = 0

    @classmethod
    def from_profile(
        cls,
        params: PhysParams,
        grid: PolarGrid,
        profile: np.ndarray,
        amplitude: float = 1.0,
        dilation: float = 1.0,
        iterations: int = 0,
    ) -> "GroundState":
        """Evaluate and cache every functional of a radial profile."""
        profile = np.array(profile, dtype=float)
        profile.flags.writeable = False
        forms = _radial_forms(params, grid)
        m_val = forms.mass(profile)
        g_val = forms.grad(profile)
        p_val = forms.potential(profile)
        shifted = PhysParams(alpha=0.0, rho=params.rho, p=params.p, kappa=params.kappa)
        plain = mode_operator(sector_mode(params), shifted, grid)
        gs_val = float(np.dot(profile, plain.stiffness_apply(profile)))
        return cls(
            params=params,
            grid=grid,
            profile=profile,
            mass=m_val,
            grad_alpha_sq=g_val,
            grad_sq=gs_val,
            potential=p_val,
            energy=g_val - 2.0 / (params.p + 1.0) * p_val,
            k_opt=sharp_constant_value(params, m_val),
            weinstein_value=_weinstein_value(forms, profile, params.big_a, params.big_b),
            amplitude=amplitude,
            dilation=dilation,
            iterations=iterations,
        )

    @property
    def mode(self) -> int:
        return sector_mode(self.params)

    def field(self) -> Field:
        return Field.radial(self.grid, self.profile, mode=self.mode)

    def on_grid(self, grid: PolarGrid) -> Field:
        """phi resampled onto another grid, zero beyond its own support radius."""
        if grid == self.grid:
            return Field.radial(grid, self.profile, mode=self.mode)
        return Field.radial(grid, transfer_profile(self.profile, self.grid, grid), mode=self.mode)

    def summary(self) -> GroundStateSummary:
        return GroundStateSummary(
            params=self.params,
            n_r=self.grid.n_r,
            r_max=self.grid.r_max,
            mass=self.mass,
            grad_alpha_sq=self.grad_alpha_sq,
            grad_sq=self.grad_sq,
            potential=self.potential,
            energy=self.energy,
            k_opt=self.k_opt,
            weinstein_value=self.weinstein_value,
            amplitude=self.amplitude,
            dilation=self.dilation,
            pohozaev_residuals=pohozaev_residuals(self),
            euler_lagrange_residual=el_residual(self),
            iterations=self.iterations,
        )


@dataclass
class DescentResult:
    """
    Raw Weinstein minimizer together with the J history of the iteration.

    ``profile`` is normalized to M = ||nabla_alpha psi||^2 = 1 on ``grid``, the solve
    grid dilated so that both normalizations hold with the node values kept.
    """
    profile: np.ndarray
    grid: PolarGrid
    history: list[float] = field(default_factory=list)
    iterations: int = 0
    residual: float = math.inf


def seed_profile(kind: str, params: PhysParams, grid: PolarGrid) -> np.ndarray:
    """
    Positive starting profile for the descent.

    Args:
        kind: "gaussian" for r^nu e^{-r^2/2}, "plateau" for a flat top with a steep edge
        params: Physical parameters
        grid: Solve grid

    Raises:
        ConfigError: For an unknown seed kind
    """
    r = grid.nodes
    nu = params.dist_alpha
    if kind == "gaussian":
        return r**nu * np.exp(-(r**2) / 2.0)
    if kind == "plateau":
        return r**nu / (1.0 + (r / 2.0) ** 8)
    raise ConfigError(f"Unknown seed profile: {kind}")


def _normalized_on_dilated_grid(forms: _RadialForms, psi: np.ndarray, grid: PolarGrid) -> tuple[np.ndarray, PolarGrid]:
    """Unit-mass psi rescaled to M = G = 1; the dilation is carried by the grid."""
    scale = 1.0 / math.sqrt(forms.grad(psi))
    return psi * scale, grid.dilated(scale)


def minimize_weinstein(
    params: PhysParams,
    grid: PolarGrid,
    seed: np.ndarray,
    tol: float = 1e-12,
    max_iters: int = 5000,
    validation: bool = False,
) -> DescentResult:
    """
    Minimize J over the radial sector by a fixed-frequency normalized iteration.

    Each step maps psi to T(psi) = (S + W)^{-1} W |x|^{-rho} psi^p rescaled to unit mass
    and moves towards it, backtracking until J does not increase. The unit frequency pins
    the dilation along which J is flat; fixed points solve
    K_alpha psi + psi = c |x|^{-rho} psi^p, the minimizers of J up to scaling.

    Args:
        params: Physical parameters
        grid: Solve grid
        seed: Positive radial starting profile
        tol: Stop once the unit-mass fixed-point residual ||psi - T(psi)||_w falls below
            sqrt(tol) or the relative J decrease of a step below tol
        max_iters: Iteration limit
        validation: Allow parameters outside the theory regime

    Returns:
        DescentResult holding the minimizer normalized to M = G = 1 and the J history

    Raises:
        ConfigError: Parameters outside the theory regime without validation, or a bad seed
        ConvergenceError: Iteration limit reached or the profile collapsed
    """
    if not params.theory_regime and not validation:
        raise ConfigError(f"Parameters {params} lie outside the theory regime; enable validation mode")
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (grid.n_r,) or not np.all(seed > 0.0):
        raise ConfigError("Seed profile must be strictly positive with one value per radial node")

    big_a, big_b, p = params.big_a, params.big_b, params.p
    forms = _radial_forms(params, grid)
    source_weight = forms.op.weights * forms.potential_weight
    banded = np.zeros((2, grid.n_r))
    banded[0, 1:] = forms.op.offdiag
    banded[1] = forms.op.diag + forms.op.weights
    factor = cholesky_banded(banded)
    residual_tol = math.sqrt(tol)

    def unit_mass(v: np.ndarray) -> np.ndarray:
        return v / math.sqrt(forms.mass(v))

    psi = unit_mass(seed)
    value = _weinstein_value(forms, psi, big_a, big_b)
    history = [value]
    for iteration in range(1, max_iters + 1):
        direction = psi - unit_mass(cho_solve_banded((factor, False), source_weight * psi**p))
        residual = math.sqrt(forms.mass(direction))
        if residual <= residual_tol:
            logger.info("Weinstein iteration converged after %d steps, J=%.12g", iteration, value)
            return _descent_result(forms, psi, grid, history, iteration, residual)

        step = 1.0
        for _ in range(MAX_BACKTRACKS):
            trial = psi - step * direction
            if np.all(trial > 0.0):
                trial = unit_mass(trial)
                trial_value = _weinstein_value(forms, trial, big_a, big_b)
                if trial_value <= value:
                    break
            step /= 2.0
        else:
            logger.info("Weinstein iteration stationary after %d steps, residual %.3g", iteration, residual)
            return _descent_result(forms, psi, grid, history, iteration, residual)

        decrease = (value - trial_value) / value
        psi, value = trial, trial_value
        history.append(value)
        logger.debug("Weinstein iteration %d: J=%.15g step=%g residual=%.3g", iteration, value, step, residual)
        if step == 1.0 and decrease < tol:
            logger.info("Weinstein iteration converged after %d steps, J=%.12g", iteration, value)
            return _descent_result(forms, psi, grid, history, iteration, residual)
    raise ConvergenceError(f"Weinstein iteration did not converge in {max_iters} iterations")


def _descent_result(
    forms: _RadialForms,
    psi: np.ndarray,
    grid: PolarGrid,
    history: list[float],
    iterations: int,
    residual: float,
) -> DescentResult:
    if not np.all(np.isfinite(psi)) or forms.potential(psi) <= 0.0:
        raise ConvergenceError("Weinstein iteration produced a degenerate profile")
    profile, dilated = _normalized_on_dilated_grid(forms, psi, grid)
    return DescentResult(profile=profile, grid=dilated, history=history, iterations=iterations, residual=residual)


def rescale_factors(params: PhysParams, m_val: float, g_val: float, p_val: float) -> tuple[float, float]:
    """
    Amplitude lambda and dilation mu so that lambda psi(mu x) satisfies both Pohozaev identities.

    Raises:
        ConvergenceError: If the profile is degenerate (P = 0)
    """
    if not (p_val > 0.0 and g_val > 0.0 and m_val > 0.0):
        raise ConvergenceError("Degenerate minimizer: M, G and P must all be positive")
    big_a, big_b, p = params.big_a, params.big_b, params.p
    mu = math.sqrt(big_b * m_val / (big_a * g_val))
    lam = ((p + 1.0) * g_val * mu ** (2.0 - params.rho) / (big_b * p_val)) ** (1.0 / (p - 1.0))
    return lam, mu


def rescale_to_ground_state(psi: np.ndarray, params: PhysParams, grid: PolarGrid, iterations: int = 0) -> GroundState:
    """
    Turn a Weinstein minimizer into the ground state phi(x) = lambda psi(mu x).

    The rescaled profile keeps the node values and moves to grid.dilated(mu),
    so every discrete functional scales exactly.
    """
    forms = _radial_forms(params, grid)
    psi = np.asarray(psi, dtype=float)
    lam, mu = rescale_factors(params, forms.mass(psi), forms.grad(psi), forms.potential(psi))
    gs = GroundState.from_profile(
        params, grid.dilated(mu), lam * psi,
        amplitude=lam, dilation=mu, iterations=iterations,
    )
    logger.info("Rescaled minimizer with lambda=%.12g mu=%.12g; M[phi]=%.12g", lam, mu, gs.mass)
    return gs


def pohozaev_residuals(gs: GroundState) -> tuple[float, float]:
    """(|P - (p+1)/A M| / P, |P - (p+1)/B G| / P)."""
    p = gs.params.p
    r1 = abs(gs.potential - (p + 1.0) / gs.params.big_a * gs.mass) / gs.potential
    r2 = abs(gs.potential - (p + 1.0) / gs.params.big_b * gs.grad_alpha_sq) / gs.potential
    return r1, r2


def sharp_constant_value(params: PhysParams, ground_mass: float) -> float:
    """K_opt = (p+1)/A (A/B)^{B/2} M[phi]^{-(p-1)/2}."""
    big_a, big_b, p = params.big_a, params.big_b, params.p
    return (p + 1.0) / big_a * (big_a / big_b) ** (big_b / 2.0) * ground_mass ** (-(p - 1.0) / 2.0)


def sharp_constant(gs: GroundState) -> float:
    """Sharp Gagliardo-Nirenberg constant of the ground state."""
    return sharp_constant_value(gs.params, gs.mass)


def el_residual(gs: GroundState) -> float:
    """||K_alpha phi + phi - |x|^{-rho} phi^p||_w / ||phi||_w on the ground-state grid."""
    op = mode_operator(gs.mode, gs.params, gs.grid)
    phi = np.asarray(gs.profile)
    residual = op.apply(phi) + phi - gs.grid.nodes ** (-gs.params.rho) * np.abs(phi) ** gs.params.p
    weights = gs.grid.weights
    return math.sqrt(np.dot(weights, residual**2) / np.dot(weights, phi**2))


def near_origin_exponent(gs: GroundState, nodes: int = 3, skip: int = 1) -> float:
    """
    Slope of log phi against log r over the innermost nodes.

    The first node carries the one-sided inner closure of the stencil and is skipped by default.
    """
    window = slice(skip, skip + nodes)
    r = gs.grid.nodes[window]
    slope, _ = np.polyfit(np.log(r), np.log(np.asarray(gs.profile[window])), 1)
    return float(slope)


def is_nonincreasing_after_peak(profile: np.ndarray) -> bool:
    """True when the profile never increases after its maximum."""
    profile = np.asarray(profile)
    peak = int(np.argmax(profile))
    return bool(np.all(np.diff(profile[peak:]) <= 0.0))


def compute_ground_state(
    params: PhysParams,
    grid: PolarGrid,
    seed: str = "gaussian",
    tol: float = 1e-12,
    max_iters: int = 5000,
    validation: bool = False,
) -> GroundState:
    """Full pipeline: seed, minimize J, rescale."""
    result = minimize_weinstein(
        params, grid, seed_profile(seed, params, grid),
        tol=tol, max_iters=max_iters, validation=validation,
    )
    return rescale_to_ground_state(result.profile, params, result.grid, iterations=result.iterations)


def probe_symmetry_breaking(
    gs: GroundState,
    grid: PolarGrid,
    amplitudes: tuple[float, ...] = (0.0, 0.01, 0.05, 0.1, 0.2),
    rtol: float = 1e-8,
) -> MonitorReport:
    """
    Evaluate J on phi + delta * (phi in the neighbouring angular modes).

    The verdict is ``violated`` when some perturbation lowers J below J(phi) on
    the same grid by more than rtol, i.e. the radial sector is not minimizing.

    Raises:
        ConfigError: If the grid resolves no neighbouring mode
    """
    if grid.n_modes < 3:
        raise ConfigError("Symmetry-breaking probe needs at least three angular modes")
    base = gs.on_grid(grid)
    radial = np.abs(base.values[:, 0])
    bump = np.exp(-grid.nodes**2)
    ring = np.outer(radial * grid.nodes * bump, np.cos(grid.theta))
    values = {}
    for delta in amplitudes:
        values[delta] = weinstein(Field(grid, base.values + delta * ring), gs.params, grid)
    reference = weinstein(base, gs.params, grid)
    lowest = min(values.values())
    verdict = Verdict.VIOLATED if lowest < reference * (1.0 - rtol) else Verdict.HOLDS
    return MonitorReport(
        name="symmetry_breaking",
        verdict=verdict,
        evidence={
            "reference_j": reference,
            "lowest_j": lowest,
            "j_by_amplitude": {format(k, "g"): v for k, v in values.items()},
        },
        notes=["perturbation ~ r exp(-r^2) phi(r) cos(theta)"],
    )
