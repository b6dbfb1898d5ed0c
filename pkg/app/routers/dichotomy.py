"""dichotomy subcommand: predicted versus observed outcome for c * phi over amplitudes c."""
import logging
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from app.config import get_settings
from app.exceptions import NumericalGateError
from app.routers.evolve import evolve_field
from app.routers.groundstate import solve_ground_state
from app.schemas.experiment import ExperimentConfig
from app.schemas.records import DichotomyRow, Prediction
from app.storage import write_csv, write_manifest, write_selected
from app.utils.diagnostics import observed_outcome, threshold_classifier
from app.utils.groundstate import GroundState

logger = logging.getLogger(__name__)

DEFAULT_AMPLITUDES = (0.3, 0.5, 0.8, 1.0, 1.3, 1.5)
DICHOTOMY_COLUMNS = tuple(DichotomyRow.model_fields)


def run_amplitude(task: tuple[ExperimentConfig, GroundState, float]) -> DichotomyRow:
    """Classify and evolve c * phi on the ground state's own grid."""
    config, gs, c = task
    grid = gs.grid
    u0 = gs.field().scaled(c)
    predicted = threshold_classifier(u0, gs, config.params, grid, config.diagnostics.threshold_tol)
    traj = evolve_field(config, u0, grid, gs)
    observed = observed_outcome(traj)
    mismatch = predicted.predicted is not Prediction.OUTSIDE_THEORY and predicted.predicted is not observed
    row = DichotomyRow(
        c=c,
        em=predicted.em,
        gm=predicted.gm,
        pm=predicted.pm,
        predicted=predicted.predicted,
        termination=traj.termination,
        t_final=traj.records[-1].t,
        max_gm=float(np.nanmax(traj.column("gm"))),
        min_gm=float(np.nanmin(traj.column("gm"))),
        max_gm_alpha=float(np.nanmax(traj.column("gm_alpha"))),
        min_gm_alpha=float(np.nanmin(traj.column("gm_alpha"))),
        max_q=float(np.max(traj.column("virial_q"))),
        observed=observed,
        mismatch=mismatch,
    )
    logger.info("c=%g predicted=%s observed=%s", c, row.predicted.value, row.observed.value)
    return row


def cmd_dichotomy(
    config: ExperimentConfig,
    output_dir: Path,
    amplitudes: list[float] | None = None,
) -> list[DichotomyRow]:
    """
    Write dichotomy.csv and manifest.json; rows follow the order of the amplitudes.

    Raises:
        NumericalGateError: If any prediction inside the theory disagrees with the run
    """
    amplitudes = list(amplitudes or DEFAULT_AMPLITUDES)
    gs = solve_ground_state(config)
    tasks = [(config, gs, float(c)) for c in amplitudes]
    workers = get_settings().workers
    if workers > 1:
        with Pool(min(workers, len(tasks))) as pool:
            rows = pool.map(run_amplitude, tasks)
    else:
        rows = [run_amplitude(task) for task in tasks]

    artifacts = write_selected(config.output.formats, [
        ("csv", lambda: write_csv(
            output_dir / "dichotomy.csv",
            DICHOTOMY_COLUMNS,
            ([getattr(row, name) for name in DICHOTOMY_COLUMNS] for row in rows),
        )),
    ])
    write_manifest(output_dir, "dichotomy", config, artifacts, extra={"amplitudes": amplitudes})
    for row in rows:
        print(f"c={row.c:g}: predicted={row.predicted.value} observed={row.observed.value}")
    mismatches = [row.c for row in rows if row.mismatch]
    if mismatches:
        raise NumericalGateError(f"Prediction/observation mismatch at c={mismatches}")
    return rows
