"""groundstate subcommand: minimize, rescale, check residuals, write profile and sidecar."""
import logging
from pathlib import Path

from app.exceptions import NumericalGateError
from app.models.grid import make_grid
from app.schemas.experiment import ExperimentConfig
from app.storage import write_json, write_manifest, write_profile_csv, write_selected
from app.utils.functionals import critical_constants
from app.utils.groundstate import POHOZAEV_GATE, GroundState, compute_ground_state, pohozaev_residuals

logger = logging.getLogger(__name__)


def solve_ground_state(config: ExperimentConfig) -> GroundState:
    """
    Ground state for the configured parameters on the configured grid.

    Raises:
        MassCriticalError: If p = 3 - rho outside validation mode
        ConfigError: If the parameters leave the theory regime outside validation mode
        ConvergenceError: If the descent fails
    """
    section = config.groundstate
    if not section.validation:
        critical_constants(config.params)
    grid = make_grid(config.grid.n_r, config.grid.r_max, config.grid.n_modes)
    return compute_ground_state(
        config.params, grid,
        seed=section.seed, tol=section.tol, max_iters=section.max_iters,
        validation=section.validation,
    )


def cmd_groundstate(config: ExperimentConfig, output_dir: Path) -> GroundState:
    """
    Write profile.csv, groundstate.json and manifest.json.

    Raises:
        NumericalGateError: If a Pohozaev residual exceeds the gate (files are still written)
    """
    gs = solve_ground_state(config)
    summary = gs.summary()
    artifacts = write_selected(config.output.formats, [
        ("csv", lambda: write_profile_csv(output_dir / "profile.csv", gs)),
        ("json", lambda: write_json(output_dir / "groundstate.json", summary)),
    ])
    write_manifest(output_dir, "groundstate", config, artifacts)
    r1, r2 = pohozaev_residuals(gs)
    print(f"groundstate: M={gs.mass:.12g} K_opt={gs.k_opt:.12g} pohozaev=({r1:.3e}, {r2:.3e})")
    if max(r1, r2) > POHOZAEV_GATE:
        raise NumericalGateError(f"Pohozaev residuals ({r1:.3e}, {r2:.3e}) exceed {POHOZAEV_GATE:g}")
    logger.info("Ground state written to %s", output_dir)
    return gs
