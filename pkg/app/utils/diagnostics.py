"""Virial, Morawetz, blow-up and scattering monitors, and the threshold classifier."""
import logging
import math
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from app.models.grid import Field, PolarGrid, analyze, integrate
from app.schemas.params import PhysParams
from app.schemas.records import (
    MonitorReport,
    Prediction,
    TerminationReason,
    ThresholdClassification,
    VanishingPoint,
    Verdict,
)
from app.utils.evolve import Trajectory
from app.utils.functionals import critical_constants, invariant_ratios, localized_density
from app.utils.groundstate import GroundState
from app.utils.magop import centrifugal_coefficients, face_coefficients, stiffness_bands
from app.utils.weights import BumpWeight, RadialWeight

logger = logging.getLogger(__name__)

MORAWETZ_SLACK = 0.1
DYADIC_LEVELS = 4


def virial_value(u: Field, w: RadialWeight, grid: PolarGrid) -> float:
    """V_b = int b(x) |u|^2."""
    grid.require_same(u.grid)
    return float(integrate(u.density * w.sample(grid).value[:, None], grid))


def virial_second_derivative(u: Field, w: RadialWeight, params: PhysParams, grid: PolarGrid) -> float:
    """
    d^2/dt^2 V_b along the flow, evaluated on a single field.

    -int Lap^2 b |u|^2 + 4 int nabla_alpha u . D^2 b . conj(nabla_alpha u)
    + kappa 2(p-1)/(p+1) int Lap b |x|^{-rho} |u|^{p+1}
    - kappa 4/(p+1) int nabla b . nabla |x|^{-rho} |u|^{p+1}

    The Hessian term uses b'' on the radial differences and b'/r on the angular part,
    so for b = |x|^2 and kappa = -1 the result is 8 Q[u] on the grid.

    Raises:
        GridMismatchError: If u lives on another grid
    """
    grid.require_same(u.grid)
    samples = w.sample(grid)
    stack = analyze(u)
    g = stack.coeffs
    r = grid.nodes
    p, rho, kappa = params.p, params.rho, params.kappa

    face = face_coefficients(grid) * samples.face_d2
    hessian = np.sum(face[:-1, None] * np.abs(np.diff(g, axis=0)) ** 2) + np.sum(face[-1] * np.abs(g[-1]) ** 2)
    centrifugal = centrifugal_coefficients(grid, np.abs(grid.modes + params.alpha))
    hessian += np.sum(samples.angular[:, None] * centrifugal * np.abs(g) ** 2)

    density = u.density
    nonlinear = r[:, None] ** (-rho) * np.abs(u.values) ** (p + 1.0)
    bilap = integrate(samples.bilaplacian[:, None] * density, grid)
    lap = integrate(samples.laplacian[:, None] * nonlinear, grid)
    radial = integrate((samples.d1 * (-rho) / r)[:, None] * nonlinear, grid)
    return float(
        -bilap
        + 4.0 * hessian
        + kappa * 2.0 * (p - 1.0) / (p + 1.0) * lap
        - kappa * 4.0 / (p + 1.0) * radial
    )


def _face_current(g: np.ndarray, h: np.ndarray, coupling: np.ndarray) -> float:
    """sum_m sum_j c_j Im(conj(h_j) g_{j+1} + conj(g_j) h_{j+1})."""
    pairs = np.conj(h[:-1]) * g[1:] + np.conj(g[:-1]) * h[1:]
    return float(np.sum(coupling[:, None] * pairs.imag))


def flow_virial_second_derivative(u: Field, w: RadialWeight, params: PhysParams, grid: PolarGrid) -> float:
    """
    d^2/dt^2 V_b along the semi-discrete flow i u_t = K_alpha u + kappa |x|^{-rho} |u|^{p-1} u.

    On the grid V_b' = 2 sum_j F_j (b_{j+1} - b_j) Im(conj(g_j) g_{j+1}) summed over modes,
    with F the interior face coefficients; differentiating once more along the flow gives
    the value returned here. Second differences of V_b along a run converge to it as dt -> 0,
    while virial_second_derivative agrees with it up to the spatial truncation error.

    Raises:
        GridMismatchError: If u lives on another grid
    """
    grid.require_same(u.grid)
    b = w.sample(grid).value
    g = analyze(u).coeffs
    diag, off = stiffness_bands(grid, params.alpha)
    stiff = diag * g
    stiff[:-1] += off[:, None] * g[1:]
    stiff[1:] += off[:, None] * g[:-1]
    nonlinear = params.kappa * grid.nodes[:, None] ** (-params.rho) * np.abs(u.values) ** (params.p - 1.0) * u.values
    rate = -1j * (stiff / grid.weights[:, None] + analyze(Field(grid, nonlinear)).coeffs)
    coupling = face_coefficients(grid)[:-1] * np.diff(b)
    return 2.0 * _face_current(g, rate, coupling)


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def morawetz_growth(traj: Trajectory, params: PhysParams) -> MonitorReport:
    """
    Growth exponent of int_0^T P[u(t)] dt over dyadic T = t_end / 2^k.

    Holds when the fitted exponent stays below 1/(1 + rho) + 0.1.
    """
    bound = 1.0 / (1.0 + params.rho) + MORAWETZ_SLACK
    times = traj.times
    if len(times) < 3 or times[-1] <= 0.0:
        return MonitorReport(name="morawetz", verdict=Verdict.INCONCLUSIVE, evidence={"bound": bound},
                             notes=["trajectory too short"])
    cumulative = cumulative_trapezoid(traj.column("potential"), times, initial=0.0)
    horizons = [times[-1] / 2.0**k for k in range(DYADIC_LEVELS)]
    horizons = sorted(T for T in horizons if T > times[1])
    if len(horizons) < 2:
        return MonitorReport(name="morawetz", verdict=Verdict.INCONCLUSIVE, evidence={"bound": bound},
                             notes=["fewer than two dyadic horizons"])
    integrals = np.interp(horizons, times, cumulative)
    if not np.all(integrals > 0.0):
        return MonitorReport(name="morawetz", verdict=Verdict.INCONCLUSIVE, evidence={"bound": bound},
                             notes=["space-time potential vanishes"])
    slope = _fit_slope(np.array(horizons), integrals)
    return MonitorReport(
        name="morawetz",
        verdict=Verdict.HOLDS if slope <= bound else Verdict.VIOLATED,
        evidence={"exponent": slope, "bound": bound, "horizons": horizons, "integrals": integrals.tolist()},
    )


def vanishing_sequence(traj: Trajectory, grid: PolarGrid, params: PhysParams) -> list[VanishingPoint]:
    """
    Times t_n in [T/2, T] minimizing the potential inside |x| < T^{1/(1+rho)}.

    Windows use T = t_end / 2^k; runs that did not complete yield an empty list.
    """
    if traj.termination is not TerminationReason.COMPLETED or len(traj.records) < 2:
        return []
    times = traj.times
    t_end = times[-1]
    points = []
    for k in reversed(range(DYADIC_LEVELS)):
        horizon = t_end / 2.0**k
        window = [i for i, t in enumerate(times) if horizon / 2.0 <= t <= horizon]
        if not window:
            continue
        radius = horizon ** (1.0 / (1.0 + params.rho))
        local = [localized_density(traj.densities[i].potential, grid.nodes < radius) for i in window]
        best = int(np.argmin(local))
        points.append(VanishingPoint(t=float(times[window[best]]), radius=radius, local_potential=local[best]))
    return points


def blowup_monitor(
    traj: Trajectory,
    params: PhysParams,
    gs: Optional[GroundState] = None,
    radius: float = 4.0,
) -> MonitorReport:
    """
    Blow-up signature: Q < 0 at every record and the gradient cap was hit.

    Also reports the localized-virial driver Q + R^{-2} + R^{-rho} ||nabla u||^{2(p-1)}.
    """
    if not traj.records:
        return MonitorReport(name="blowup", verdict=Verdict.INCONCLUSIVE, notes=["empty trajectory"])
    q = traj.column("virial_q")
    grad = np.sqrt(traj.column("grad_sq"))
    driver = q + radius**-2.0 + radius ** (-params.rho) * grad ** (2.0 * (params.p - 1.0))
    negative = bool(np.all(q < 0.0))
    capped = traj.termination is TerminationReason.GRADIENT_CAP_HIT
    evidence = {
        "max_q": float(np.max(q)),
        "min_q": float(np.min(q)),
        "max_grad": float(np.max(grad)),
        "t_final": float(traj.times[-1]),
        "termination": traj.termination.value,
        "driver_radius": radius,
        "driver_final": float(driver[-1]),
    }
    if gs is not None:
        evidence["initial_em"] = traj.records[0].em
        evidence["initial_gm"] = traj.records[0].gm
    if negative and capped:
        verdict = Verdict.HOLDS
    elif negative:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.VIOLATED
    return MonitorReport(name="blowup", verdict=verdict, evidence=evidence)


def _pm_series(traj: Trajectory, gs: GroundState, params: PhysParams) -> np.ndarray:
    _, lam, _, _ = critical_constants(params)
    mass = traj.column("mass")
    return traj.column("potential") / gs.potential * (mass / gs.mass) ** lam


def scattering_monitor(
    traj: Trajectory,
    grid: PolarGrid,
    params: PhysParams,
    gs: GroundState,
    radius: float = 1.0,
    epsilon: Optional[float] = None,
    leak_fraction: float = 0.5,
    threshold_tol: float = 1e-6,
) -> MonitorReport:
    """
    Scattering consistency: sup PM < 1 and the localized mass int psi_R |u|^2 leaks below epsilon^2.

    psi_R is the smooth bump equal to 1 on |x| < R/2 and 0 beyond R.
    liminf is taken as the minimum over the recorded tail [t_end/2, t_end].
    Without epsilon, epsilon^2 is leak_fraction times the initial localized mass.
    """
    if not traj.records:
        return MonitorReport(name="scattering", verdict=Verdict.INCONCLUSIVE, notes=["empty trajectory"])
    pm = _pm_series(traj, gs, params)
    times = traj.times
    bump = BumpWeight(radius).sample(grid).value
    balls = np.array([localized_density(d.mass, bump) for d in traj.densities])
    eps_sq = epsilon**2 if epsilon is not None else leak_fraction * balls[0]
    tail = times >= times[-1] / 2.0
    tail_min = float(np.min(balls[tail]))
    potentials = traj.column("potential")
    below_threshold = bool(np.max(pm) < 1.0)
    leaked = tail_min < eps_sq
    evidence = {
        "sup_pm": float(np.max(pm)),
        "bump_radius": radius,
        "epsilon_sq": eps_sq,
        "tail_min_bump_mass": tail_min,
        "potential_ratio": float(potentials[-1] / potentials[0]) if potentials[0] > 0.0 else None,
        "termination": traj.termination.value,
    }
    notes = ["liminf approximated by the minimum over [t_end/2, t_end]"]
    if abs(pm[0] - 1.0) <= threshold_tol:
        verdict = Verdict.INCONCLUSIVE
        notes.append("initial data sits on the threshold PM = 1")
    elif traj.termination is not TerminationReason.COMPLETED:
        verdict = Verdict.VIOLATED
    else:
        verdict = Verdict.HOLDS if below_threshold and leaked else Verdict.VIOLATED
    return MonitorReport(name="scattering", verdict=verdict, evidence=evidence, notes=notes)


def threshold_classifier(
    u0: Field,
    gs: GroundState,
    params: PhysParams,
    grid: PolarGrid,
    threshold_tol: float = 1e-6,
) -> ThresholdClassification:
    """
    Predict the dynamics of u0 from EM and GM.

    EM < 1 and GM < 1 predicts global scattering, EM < 1 and GM > 1 predicts blow-up;
    anything else, including |EM - 1| or |GM - 1| within threshold_tol, is outside the theory.
    """
    em, gm, pm = invariant_ratios(u0, gs, params, grid)
    if abs(em - 1.0) <= threshold_tol or abs(gm - 1.0) <= threshold_tol or em >= 1.0:
        predicted = Prediction.OUTSIDE_THEORY
    elif gm < 1.0:
        predicted = Prediction.GLOBAL_SCATTERING
    else:
        predicted = Prediction.BLOWUP
    return ThresholdClassification(em=em, gm=gm, pm=pm, predicted=predicted)


def observed_outcome(traj: Trajectory) -> Prediction:
    """Map a termination reason onto the classifier's outcome labels."""
    if traj.termination is TerminationReason.GRADIENT_CAP_HIT:
        return Prediction.BLOWUP
    if traj.termination is TerminationReason.COMPLETED:
        return Prediction.GLOBAL_SCATTERING
    return Prediction.OUTSIDE_THEORY


def localized_virial(u: Field, w: RadialWeight, params: PhysParams, grid: PolarGrid) -> dict[str, float]:
    """V_b with its closed-form and flow second derivatives for one weight, for reports."""
    value = virial_value(u, w, grid)
    second = virial_second_derivative(u, w, params, grid)
    flow = flow_virial_second_derivative(u, w, params, grid)
    if not (math.isfinite(second) and math.isfinite(flow)):
        logger.warning("Localized virial is not finite for %s", w.kind.value)
    return {"value": value, "second_derivative": second, "flow_second_derivative": flow}
