"""evolve subcommand: build initial data, run the evolver, apply the monitors."""
import logging
from pathlib import Path
from typing import Any, Optional

from app.exceptions import ConfigError
from app.models.grid import PolarGrid, make_grid
from app.routers.groundstate import solve_ground_state
from app.schemas.experiment import ExperimentConfig
from app.schemas.weights import WeightKind
from app.storage import write_field_csv, write_json, write_manifest, write_selected, write_trajectory_csv
from app.utils.diagnostics import (
    blowup_monitor,
    localized_virial,
    morawetz_growth,
    scattering_monitor,
    threshold_classifier,
    vanishing_sequence,
)
from app.utils.evolve import EvolveConfig, Trajectory, run
from app.utils.functionals import ball_potential, bump_mass
from app.utils.groundstate import GroundState
from app.utils.initial_data import initial_field
from app.utils.magop import grad_sq
from app.utils.weights import WeightFactory

logger = logging.getLogger(__name__)


def attach_ground_state(config: ExperimentConfig) -> Optional[GroundState]:
    """Ground state for the ratios and monitors, or None where it is undefined."""
    params = config.params
    if params.lambda_c is None or not (params.theory_regime or config.groundstate.validation):
        logger.warning("No ground state attached for %s", params)
        return None
    return solve_ground_state(config)


def evolution_grid(config: ExperimentConfig, spec: str, gs: Optional[GroundState]) -> PolarGrid:
    """Scaled ground-state data evolves on the ground state's own grid."""
    if spec.split() and spec.split()[0] == "scaled_ground_state" and gs is not None:
        return gs.grid
    return make_grid(config.grid.n_r, config.grid.r_max, config.grid.n_modes)


def monitor_reports(
    traj: Trajectory,
    config: ExperimentConfig,
    grid: PolarGrid,
    gs: Optional[GroundState],
) -> dict[str, Any]:
    """Every monitor report for a finished trajectory."""
    params = config.params
    diag = config.diagnostics
    reports = [
        blowup_monitor(traj, params, gs, radius=diag.blowup_radius),
        morawetz_growth(traj, params),
    ]
    if gs is not None:
        reports.append(scattering_monitor(
            traj, grid, params, gs,
            radius=diag.scatter_radius, epsilon=diag.scatter_epsilon,
            leak_fraction=diag.leak_fraction, threshold_tol=diag.threshold_tol,
        ))
    payload: dict[str, Any] = {
        "termination": traj.termination.value,
        "t_final": traj.records[-1].t,
        "monitors": {report.name: report for report in reports},
        "vanishing_sequence": vanishing_sequence(traj, grid, params),
    }
    if traj.final is not None:
        weight = WeightFactory.create_weight(WeightKind.BLOWUP, diag.blowup_radius)
        payload["localized_virial"] = localized_virial(traj.final, weight, params, grid)
        bump = WeightFactory.create_weight(WeightKind.BUMP, diag.scatter_radius)
        payload["localized_final"] = {
            "radius": diag.scatter_radius,
            "bump_mass": bump_mass(traj.final, bump, grid),
            "ball_potential": ball_potential(traj.final, diag.scatter_radius, params, grid),
        }
    return payload


def evolve_field(config: ExperimentConfig, u0, grid: PolarGrid, gs: Optional[GroundState]) -> Trajectory:
    """Run the evolver with the configured controls on u0."""
    evolve_config = EvolveConfig.from_section(config.evolve, grad_sq(u0, grid) ** 0.5)
    return run(u0, evolve_config, config.params, grid, gs=gs)


def cmd_evolve(config: ExperimentConfig, output_dir: Path, initial: str = "gaussian") -> dict[str, Any]:
    """
    Write trajectory.csv, report.json, field snapshots and manifest.json.

    Raises:
        ConfigError: For malformed initial-data specs
        StorageError: If an initial-data file cannot be read
    """
    gs = attach_ground_state(config)
    grid = evolution_grid(config, initial, gs)
    u0 = initial_field(initial, grid, config.params, gs)
    grid = u0.grid
    if not u0.density.any():
        raise ConfigError("Initial data vanishes identically")

    traj = evolve_field(config, u0, grid, gs)
    report = monitor_reports(traj, config, grid, gs)
    report["initial"] = initial
    if gs is not None:
        report["classification"] = threshold_classifier(u0, gs, config.params, grid, config.diagnostics.threshold_tol)

    writers = [
        ("csv", lambda: write_trajectory_csv(output_dir / "trajectory.csv", traj.records)),
        ("json", lambda: write_json(output_dir / "report.json", report)),
    ]
    for t, snapshot in sorted(traj.snapshots.items()):
        writers.append(("csv", lambda t=t, snapshot=snapshot: write_field_csv(output_dir / f"field_t{t:.6g}.csv", snapshot)))
    write_manifest(output_dir, "evolve", config, write_selected(config.output.formats, writers))

    print(f"evolve: termination={traj.termination.value} t_final={traj.records[-1].t:.6g}")
    for monitor in report["monitors"].values():
        print(monitor.one_line())
    return report
