"""Conserved and scale-invariant functionals, G-N deficit and coercivity checks."""
import logging
import math
from typing import TYPE_CHECKING, Optional

import numpy as np

from app.exceptions import ConfigError, MassCriticalError
from app.models.grid import Field, PolarGrid, analyze, integrate
from app.schemas.params import PhysParams
from app.schemas.records import CoercivityReport, FunctionalRecord
from app.utils.magop import grad_alpha_sq, grad_sq, quadratic_form
from app.utils.weights import RadialWeight

if TYPE_CHECKING:
    from app.utils.groundstate import GroundState

logger = logging.getLogger(__name__)

# Relative slack for the coercivity inequalities, which are equalities on c * phi.
COERCIVITY_RTOL = 1e-9


def mass(u: Field, grid: PolarGrid) -> float:
    """M[u] = int |u|^2."""
    grid.require_same(u.grid)
    return float(integrate(u.density, grid))


def _potential_density(u: Field, params: PhysParams) -> np.ndarray:
    r = u.grid.nodes[:, None]
    return r ** (-params.rho) * np.abs(u.values) ** (params.p + 1.0)


def potential(u: Field, params: PhysParams, grid: PolarGrid) -> float:
    """P[u] = int |x|^{-rho} |u|^{p+1}."""
    grid.require_same(u.grid)
    return float(integrate(_potential_density(u, params), grid))


def energy(u: Field, params: PhysParams, grid: PolarGrid) -> float:
    """E[u] = ||nabla_alpha u||^2 + kappa 2/(p+1) P[u]."""
    return grad_alpha_sq(u, params, grid) + params.kappa * 2.0 / (params.p + 1.0) * potential(u, params, grid)


def virial_quantity(u: Field, params: PhysParams, grid: PolarGrid) -> float:
    """Q[u] = ||nabla_alpha u||^2 - B/(p+1) P[u]."""
    return grad_alpha_sq(u, params, grid) - params.big_b / (params.p + 1.0) * potential(u, params, grid)


def critical_constants(params: PhysParams) -> tuple[float, float, float, float]:
    """
    Critical constants of the equation.

    Returns:
        (s_c, lambda_c, A, B)

    Raises:
        MassCriticalError: If p = 3 - rho
    """
    if params.lambda_c is None:
        raise MassCriticalError(f"mass-critical: lambda_c undefined for p = 3 - rho = {params.p}")
    return params.s_c, params.lambda_c, params.big_a, params.big_b


def weinstein(u: Field, params: PhysParams, grid: PolarGrid) -> float:
    """J[u] = M^{A/2} ||nabla_alpha u||^{B} / P; +inf when P vanishes."""
    p_val = potential(u, params, grid)
    if p_val <= 0.0:
        return math.inf
    m_val = mass(u, grid)
    g_val = grad_alpha_sq(u, params, grid)
    return m_val ** (params.big_a / 2.0) * g_val ** (params.big_b / 2.0) / p_val


def _require_ground_state(gs: "GroundState", params: PhysParams) -> None:
    if not gs.params.same_equation(params):
        raise ConfigError(f"Ground state was computed for {gs.params}, not {params}")


def _ratios(m_val, e_val, g_val, ga_val, p_val, gs: "GroundState", params: PhysParams):
    _, lam, _, _ = critical_constants(params)
    mass_ratio = m_val / gs.mass
    em = e_val / gs.energy * mass_ratio**lam
    gm = math.sqrt(g_val / gs.grad_sq) * mass_ratio ** (lam / 2.0)
    pm = p_val / gs.potential * mass_ratio**lam
    gm_alpha = math.sqrt(ga_val / gs.grad_alpha_sq) * mass_ratio ** (lam / 2.0)
    return em, gm, pm, gm_alpha


def invariant_ratios(u: Field, gs: "GroundState", params: PhysParams, grid: PolarGrid) -> tuple[float, float, float]:
    """
    Scale-invariant ratios EM, GM and PM against the ground state.

    GM is built on the non-magnetic gradient norm.

    Raises:
        ConfigError: If gs belongs to different (alpha, rho, p)
        MassCriticalError: If lambda_c is undefined
    """
    _require_ground_state(gs, params)
    em, gm, pm, _ = _ratios(
        mass(u, grid), energy(u, params, grid), grad_sq(u, grid),
        grad_alpha_sq(u, params, grid), potential(u, params, grid), gs, params,
    )
    return em, gm, pm


def gm_alpha(u: Field, gs: "GroundState", params: PhysParams, grid: PolarGrid) -> float:
    """GM built on the magnetic gradient norm instead."""
    _require_ground_state(gs, params)
    return _ratios(
        mass(u, grid), energy(u, params, grid), grad_sq(u, grid),
        grad_alpha_sq(u, params, grid), potential(u, params, grid), gs, params,
    )[3]


def gn_deficit(u: Field, gs: "GroundState", params: PhysParams, grid: PolarGrid) -> float:
    """K_opt ||u||^A ||u||_{H^1_alpha}^B / P[u] - 1; +inf when P vanishes."""
    _require_ground_state(gs, params)
    j_val = weinstein(u, params, grid)
    if math.isinf(j_val):
        return math.inf
    return gs.k_opt * j_val - 1.0


def coercivity_report(u: Field, gs: "GroundState", params: PhysParams, grid: PolarGrid) -> CoercivityReport:
    """
    Coercivity checks with epsilon = 1 - PM[u].

    Returns:
        CoercivityReport with the potential bound, the Q margin c(epsilon, B) and the energy bound
    """
    _require_ground_state(gs, params)
    big_b = params.big_b
    g_val = grad_alpha_sq(u, params, grid)
    p_val = potential(u, params, grid)
    _, _, pm = invariant_ratios(u, gs, params, grid)
    eps = 1.0 - pm
    shrink = max(1.0 - eps, 0.0) ** ((big_b - 2.0) / big_b)
    bound = (params.p + 1.0) / big_b * shrink * g_val
    margin = coercivity_margin(eps, big_b)
    q_val = g_val - big_b / (params.p + 1.0) * p_val
    e_val = g_val - 2.0 / (params.p + 1.0) * p_val
    slack = COERCIVITY_RTOL * max(g_val, p_val, 1e-300)
    return CoercivityReport(
        pm_margin=eps,
        coer1_holds=p_val <= bound + slack,
        coer1_bound=bound,
        coer2_value=margin,
        coer2_holds=q_val >= margin * g_val - slack,
        coer3_holds=e_val >= (big_b - 2.0) / big_b * g_val - slack,
    )


def coercivity_margin(eps: float, big_b: float) -> float:
    """c(epsilon, B) = 1 - (1 - epsilon)^{(B-2)/B}."""
    return 1.0 - max(1.0 - eps, 0.0) ** ((big_b - 2.0) / big_b)


def localized_density(densities: np.ndarray, profile: np.ndarray) -> float:
    """sum_j profile_j densities_j for angle-integrated per-node densities."""
    return float(np.dot(np.asarray(profile, dtype=float), densities))


def _node_density(samples: np.ndarray, grid: PolarGrid) -> np.ndarray:
    return grid.weights * np.mean(samples, axis=1)


def ball_mass(u: Field, radius: float, grid: PolarGrid) -> float:
    """Mass inside the disk |x| < radius."""
    grid.require_same(u.grid)
    return localized_density(_node_density(u.density, grid), grid.nodes < radius)


def ball_potential(u: Field, radius: float, params: PhysParams, grid: PolarGrid) -> float:
    """P restricted to the disk |x| < radius."""
    grid.require_same(u.grid)
    return localized_density(_node_density(_potential_density(u, params), grid), grid.nodes < radius)


def bump_mass(u: Field, bump: RadialWeight | np.ndarray, grid: PolarGrid) -> float:
    """int psi |u|^2 for a radial weight psi or its samples on the grid."""
    grid.require_same(u.grid)
    profile = bump.sample(grid).value if isinstance(bump, RadialWeight) else np.asarray(bump)
    return localized_density(_node_density(u.density, grid), profile)


def scale_field(u: Field, mu: float, params: PhysParams) -> Field:
    """
    The critical scaling u_mu(x) = mu^{(2-rho)/(p-1)} u(mu x).

    Realised exactly on the grid dilated by 1/mu, which keeps the node values.
    """
    amplitude = mu ** ((2.0 - params.rho) / (params.p - 1.0))
    return Field(u.grid.dilated(mu), amplitude * u.values)


def functional_record(
    u: Field,
    params: PhysParams,
    grid: PolarGrid,
    t: float = 0.0,
    gs: Optional["GroundState"] = None,
    dt: Optional[float] = None,
) -> FunctionalRecord:
    """
    Every functional of u in one pass over its mode stack.

    Ratios are filled in only when a ground state is attached.
    """
    grid.require_same(u.grid)
    stack = analyze(u)
    m_val = float(integrate(u.density, grid))
    p_val = float(integrate(_potential_density(u, params), grid))
    ga_val = quadratic_form(stack, params.alpha)
    g_val = quadratic_form(stack, 0.0)
    e_val = ga_val + params.kappa * 2.0 / (params.p + 1.0) * p_val
    q_val = ga_val - params.big_b / (params.p + 1.0) * p_val
    v_val = float(integrate(u.density * (grid.nodes**2)[:, None], grid))
    em = gm = pm = gma = None
    if gs is not None:
        _require_ground_state(gs, params)
        em, gm, pm, gma = _ratios(m_val, e_val, g_val, ga_val, p_val, gs, params)
    return FunctionalRecord(
        t=t, mass=m_val, energy=e_val, potential=p_val, virial_q=q_val,
        grad_alpha_sq=ga_val, grad_sq=g_val, em=em, gm=gm, pm=pm,
        gm_alpha=gma, virial=v_val, dt=dt,
    )
