"""check subcommand: the invariant battery at desk scale."""
import logging
import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from app.exceptions import ConfigError, ConvergenceError, LabError, NumericalGateError
from app.models.grid import Field, PolarGrid, analyze, integrate, make_grid, synthesize
from app.routers.groundstate import solve_ground_state
from app.schemas.experiment import ExperimentConfig
from app.schemas.records import CheckResult, Verdict
from app.schemas.weights import WeightKind
from app.storage import write_json, write_manifest, write_selected
from app.utils.diagnostics import virial_second_derivative
from app.utils.evolve import EvolveConfig, max_relative_drift, run
from app.utils.functionals import energy, gn_deficit, virial_quantity
from app.utils.groundstate import POHOZAEV_GATE, GroundState, el_residual, pohozaev_residuals
from app.utils.initial_data import gaussian, random_field
from app.utils.magop import grad_alpha_sq, hardy_check, mode_operator, smallest_eigenvalue
from app.utils.weights import WeightFactory

logger = logging.getLogger(__name__)

# Reference grid for the Bessel eigenvalue check.
EIGEN_GRID = (4096, 10.0, 1)
BATTERY_MIN_MODES = 5
CONSERVATION_T_END = 0.1


def _result(name: str, holds: bool, margin: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, verdict=Verdict.HOLDS if holds else Verdict.VIOLATED, margin=margin, detail=detail)


def _weighted_dot(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> complex:
    return complex(np.sum(weights * a * np.conj(b)))


def first_bessel_zero(nu: float) -> float:
    """
    First positive zero j_{nu,1} of J_nu.

    The bracket (nu, nu + 1.8558 nu^{1/3} + 3) holds exactly one zero for every nu >= 0.

    Raises:
        ConvergenceError: If the root search fails
    """
    upper = nu + 1.8558 * nu ** (1.0 / 3.0) + 3.0
    try:
        return brentq(lambda x: jv(nu, x), nu + 1e-6, upper)
    except (ValueError, RuntimeError) as e:
        raise ConvergenceError(f"No Bessel zero of order {nu} in ({nu}, {upper}): {e}") from e


class CheckBattery:
    """
    Runs every invariant check against one configuration.

    Grid-dependent checks report ``inconclusive`` when the grid cannot be built.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.params
        self.rng = np.random.default_rng(config.rng_seed)
        self.grid: Optional[PolarGrid] = None
        self.battery_grid: Optional[PolarGrid] = None
        self.grid_error = ""
        try:
            self.grid = make_grid(config.grid.n_r, config.grid.r_max, config.grid.n_modes)
            self.battery_grid = make_grid(config.grid.n_r, config.grid.r_max, max(config.grid.n_modes, BATTERY_MIN_MODES))
        except ConfigError as e:
            self.grid_error = str(e)
        self._fields: Optional[list[Field]] = None
        self._gs: Optional[GroundState] = None

    @property
    def fields(self) -> list[Field]:
        if self._fields is None:
            count = self.config.diagnostics.check_fields
            self._fields = [random_field(self.battery_grid, self.rng) for _ in range(count)]
        return self._fields

    @property
    def ground_state(self) -> GroundState:
        if self._gs is None:
            self._gs = solve_ground_state(self.config)
        return self._gs

    def run(self) -> list[CheckResult]:
        checks: list[tuple[str, Callable[[], CheckResult], bool]] = [
            ("quadrature", self.check_quadrature, True),
            ("parseval_roundtrip", self.check_roundtrip, True),
            ("self_adjoint", self.check_self_adjoint, True),
            ("positivity", self.check_positivity, True),
            ("shift_equivalence", self.check_shift_equivalence, True),
            ("bessel_eigenvalue", self.check_eigenvalue, False),
            ("hardy", self.check_hardy, True),
            ("q_identity", self.check_q_identity, True),
            ("virial_collapse", self.check_virial_collapse, True),
            ("weights", self.check_weights, True),
            ("pohozaev", self.check_pohozaev, True),
            ("sharpness", self.check_sharpness, True),
            ("gn_deficit", self.check_gn_deficit, True),
            ("conservation", self.check_conservation, True),
        ]
        results = []
        for name, check, needs_grid in checks:
            if needs_grid and self.grid is None:
                results.append(CheckResult(name=name, verdict=Verdict.INCONCLUSIVE, detail=self.grid_error))
                continue
            try:
                result = check()
            except LabError as e:
                result = CheckResult(name=name, verdict=Verdict.INCONCLUSIVE, detail=str(e))
            logger.info("check %s: %s", result.name, result.verdict.value)
            results.append(result)
        return results

    def check_quadrature(self) -> CheckResult:
        grid = self.grid
        exact = math.pi * grid.r_max**2
        error = abs(integrate(np.ones(grid.n_r), grid) - exact) / exact
        return _result("quadrature", error <= 1e-12, error)

    def check_roundtrip(self) -> CheckResult:
        u = self.fields[0]
        back = synthesize(analyze(u)).values
        roundtrip = float(np.max(np.abs(back - u.values)) / np.max(np.abs(u.values)))
        grid = u.grid
        direct = integrate(u.density, grid)
        modal = integrate(np.abs(analyze(u).coeffs) ** 2, grid, mode_space=True)
        parseval = abs(direct - modal) / direct
        error = max(roundtrip, parseval)
        return _result("parseval_roundtrip", error <= 1e-12, error)

    def check_self_adjoint(self) -> CheckResult:
        grid = self.grid
        worst = 0.0
        for m in (-1, 0, 1):
            op = mode_operator(m, self.params, grid)
            g = self.rng.normal(size=grid.n_r) + 1j * self.rng.normal(size=grid.n_r)
            h = self.rng.normal(size=grid.n_r) + 1j * self.rng.normal(size=grid.n_r)
            left = _weighted_dot(op.apply(g), h, grid.weights)
            right = _weighted_dot(g, op.apply(h), grid.weights)
            worst = max(worst, abs(left - right) / max(abs(left), 1e-300))
        return _result("self_adjoint", worst <= 1e-12, worst)

    def check_positivity(self) -> CheckResult:
        grid = self.grid
        lowest = math.inf
        for m in (-1, 0, 1):
            op = mode_operator(m, self.params, grid)
            g = self.rng.normal(size=grid.n_r) + 1j * self.rng.normal(size=grid.n_r)
            lowest = min(lowest, _weighted_dot(op.apply(g), g, grid.weights).real)
        return _result("positivity", lowest >= 0.0, lowest)

    def check_shift_equivalence(self) -> CheckResult:
        grid = self.grid
        shifted = self.params.model_copy(update={"alpha": self.params.alpha + 1.0})
        worst = 0.0
        for m in (-2, -1, 0, 1):
            a = mode_operator(m, shifted, grid)
            b = mode_operator(m + 1, self.params, grid)
            worst = max(worst, float(np.max(np.abs(a.diag - b.diag) / b.diag)))
        return _result("shift_equivalence", worst <= 1e-15, worst)

    def check_eigenvalue(self) -> CheckResult:
        nu = abs(self.params.alpha)
        grid = make_grid(*EIGEN_GRID)
        expected = (first_bessel_zero(nu) / grid.r_max) ** 2
        value = smallest_eigenvalue(0, self.params, grid)
        error = abs(value - expected) / expected
        return _result("bessel_eigenvalue", error <= 1e-4, error, detail=f"expected {expected:.10g}")

    def check_hardy(self) -> CheckResult:
        if self.params.dist_alpha == 0.0:
            return CheckResult(name="hardy", verdict=Verdict.SKIPPED, detail="dist(alpha, Z) = 0")
        violations, worst = 0, -math.inf
        for u in self.fields:
            lhs, rhs = hardy_check(u, self.params, u.grid)
            worst = max(worst, (lhs - rhs) / rhs)
            violations += lhs > rhs
        return _result("hardy", violations == 0, worst, detail=f"{violations} violations")

    def check_q_identity(self) -> CheckResult:
        focusing = self.params.model_copy(update={"kappa": -1})
        big_b = focusing.big_b
        worst = 0.0
        for u in self.fields:
            grid = u.grid
            q = virial_quantity(u, focusing, grid)
            rebuilt = big_b / 2.0 * energy(u, focusing, grid) - (big_b - 2.0) / 2.0 * grad_alpha_sq(u, focusing, grid)
            worst = max(worst, abs(q - rebuilt) / max(abs(q), 1e-300))
        return _result("q_identity", worst <= 1e-10, worst)

    def check_virial_collapse(self) -> CheckResult:
        focusing = self.params.model_copy(update={"kappa": -1})
        weight = WeightFactory.create_weight(WeightKind.QUADRATIC)
        worst = 0.0
        for u in self.fields:
            q = virial_quantity(u, focusing, u.grid)
            second = virial_second_derivative(u, weight, focusing, u.grid)
            worst = max(worst, abs(second - 8.0 * q) / max(abs(8.0 * q), 1e-300))
        return _result("virial_collapse", worst <= 1e-8, worst)

    def check_weights(self) -> CheckResult:
        grid = self.grid
        radius = self.config.diagnostics.blowup_radius
        morawetz = WeightFactory.create_weight(WeightKind.MORAWETZ, radius).derivatives(grid.nodes)
        annulus = (grid.nodes >= radius) & (grid.nodes <= 2.0 * radius)
        convex = float(np.min(np.minimum(morawetz[1], morawetz[2])[annulus])) if annulus.any() else 0.0
        blowup = WeightFactory.create_weight(WeightKind.BLOWUP, radius).derivatives(grid.nodes)
        excess = float(max(np.max(blowup[2] - 1.0), np.max((blowup[1] - grid.nodes) / grid.nodes)))
        return _result("weights", convex >= 0.0 and excess <= 1e-12, min(convex, -excess))

    def _require_theory_regime(self, name: str) -> Optional[CheckResult]:
        if not (self.params.theory_regime or self.config.groundstate.validation):
            return CheckResult(name=name, verdict=Verdict.SKIPPED, detail="parameters outside the theory regime")
        return None

    def check_pohozaev(self) -> CheckResult:
        skipped = self._require_theory_regime("pohozaev")
        if skipped:
            return skipped
        gs = self.ground_state
        r1, r2 = pohozaev_residuals(gs)
        el = el_residual(gs)
        return _result("pohozaev", max(r1, r2) <= POHOZAEV_GATE and el <= 1e-4, max(r1, r2),
                       detail=f"euler_lagrange={el:.3e}")

    def check_sharpness(self) -> CheckResult:
        skipped = self._require_theory_regime("sharpness")
        if skipped:
            return skipped
        gs = self.ground_state
        error = abs(gs.k_opt * gs.weinstein_value - 1.0)
        return _result("sharpness", error <= 1e-4, error)

    def check_gn_deficit(self) -> CheckResult:
        skipped = self._require_theory_regime("gn_deficit")
        if skipped:
            return skipped
        gs = self.ground_state
        lowest = min(gn_deficit(u, gs, self.params, u.grid) for u in self.fields)
        at_phi = abs(gn_deficit(gs.field(), gs, self.params, gs.grid))
        return _result("gn_deficit", lowest >= -1e-6 and at_phi <= 1e-4, lowest, detail=f"at phi {at_phi:.3e}")

    def check_conservation(self) -> CheckResult:
        defocusing = self.params.model_copy(update={"kappa": 1})
        grid = self.grid
        section = self.config.evolve
        evolve_config = EvolveConfig(dt=section.dt, t_end=min(section.t_end, CONSERVATION_T_END), adapt=False,
                                     dt_floor=section.dt_floor, record_every=1)
        traj = run(gaussian(grid, params=defocusing), evolve_config, defocusing, grid)
        mass_drift = max_relative_drift(traj.column("mass"))
        energy_drift = max_relative_drift(traj.column("energy"))
        return _result("conservation", mass_drift <= 1e-9 and energy_drift <= 1e-5, max(mass_drift, energy_drift),
                       detail=f"mass {mass_drift:.3e}, energy {energy_drift:.3e}")


def cmd_check(config: ExperimentConfig, output_dir: Path) -> list[CheckResult]:
    """
    Write check-report.json and manifest.json.

    Raises:
        NumericalGateError: Unless every check holds or is skipped
    """
    results = CheckBattery(config).run()
    artifacts = write_selected(config.output.formats, [
        ("json", lambda: write_json(output_dir / "check-report.json", {"checks": results})),
    ])
    write_manifest(output_dir, "check", config, artifacts)
    for result in results:
        print(f"{result.name}: {result.verdict.value}")
    failed = [r.name for r in results if r.verdict not in (Verdict.HOLDS, Verdict.SKIPPED)]
    if failed:
        raise NumericalGateError(f"Checks not holding: {', '.join(failed)}")
    return results
