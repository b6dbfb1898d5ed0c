"""Deterministic CSV/JSON writers and readers for every result file."""
import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

import numpy as np
import pydantic
import scipy
from pydantic import BaseModel

from app import __version__
from app.exceptions import StorageError
from app.models.grid import Field, make_grid
from app.schemas.records import RECORD_COLUMNS, RECORD_SCHEMA_VERSION

logger = logging.getLogger(__name__)

FIELD_COLUMNS = ("r", "theta", "re", "im")
PROFILE_COLUMNS = ("r", "phi")


def format_value(value: Any) -> str:
    """Floats with 17 significant digits; None as an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    """
    Write a CSV file with a fixed header.

    Raises:
        StorageError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}") from e
    logger.debug("Wrote %s", path)
    return path


def to_jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): to_jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(v) for v in payload]
    if isinstance(payload, np.generic):
        return payload.item()
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    return payload


def write_json(path: Path, payload: Any) -> Path:
    """
    Write sorted, indented JSON.

    Raises:
        StorageError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}") from e
    logger.debug("Wrote %s", path)
    return path


def write_trajectory_csv(path: Path, records) -> Path:
    """One FunctionalRecord per row in RECORD_COLUMNS order."""
    return write_csv(path, RECORD_COLUMNS, (rec.csv_values() for rec in records))


def write_profile_csv(path: Path, gs) -> Path:
    """Ground-state profile as (r, phi) rows."""
    return write_csv(path, PROFILE_COLUMNS, zip(gs.grid.nodes, gs.profile))


def write_field_csv(path: Path, field: Field) -> Path:
    """Grid dump: one (r, theta, Re u, Im u) row per sample, radius-major."""
    grid = field.grid
    rows = (
        (grid.nodes[j], grid.theta[k], field.values[j, k].real, field.values[j, k].imag)
        for j in range(grid.n_r)
        for k in range(grid.n_theta)
    )
    return write_csv(path, FIELD_COLUMNS, rows)


def read_field_csv(path: Path) -> Field:
    """
    Load a grid dump written by write_field_csv.

    Raises:
        StorageError: If the file is missing or does not describe a polar grid
    """
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"Field file not found: {path}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise StorageError(f"Cannot parse field file {path}: {e}") from e
    if data.shape[1] != len(FIELD_COLUMNS):
        raise StorageError(f"Field file {path} must have columns {FIELD_COLUMNS}")
    radii = np.unique(data[:, 0])
    n_r = radii.size
    n_theta = data.shape[0] // max(n_r, 1)
    if n_r * n_theta != data.shape[0]:
        raise StorageError(f"Field file {path} is not a full polar grid")
    h = 2.0 * radii[0]
    try:
        grid = make_grid(n_r, n_r * h, n_theta)
    except ValueError as e:
        raise StorageError(f"Field file {path} does not describe a valid grid: {e}") from e
    if not np.allclose(grid.nodes, radii, rtol=1e-12, atol=0.0):
        raise StorageError(f"Field file {path} radii are not staggered nodes")
    values = (data[:, 2] + 1j * data[:, 3]).reshape(n_r, n_theta)
    return Field(grid, values)


def write_selected(formats: Iterable[str], writers: Iterable[tuple[str, Callable[[], Path]]]) -> list[Path]:
    """
    Run the writers whose format ("csv" or "json") is enabled.

    Returns:
        Paths of the files written, in writer order
    """
    enabled = set(formats)
    written = []
    for kind, writer in writers:
        if kind in enabled:
            written.append(writer())
        else:
            logger.debug("Skipping a %s artifact; format disabled", kind)
    return written


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(
    directory: Path,
    command: str,
    config: BaseModel,
    artifacts: list[Path],
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """
    manifest.json echoing the resolved config, column schemas, versions and artifact digests.
    """
    directory = Path(directory)
    payload = {
        "command": command,
        "config": config,
        "schemas": {
            "trajectory.csv": {"version": RECORD_SCHEMA_VERSION, "columns": list(RECORD_COLUMNS)},
            "profile.csv": {"version": 1, "columns": list(PROFILE_COLUMNS)},
            "field.csv": {"version": 1, "columns": list(FIELD_COLUMNS)},
        },
        "versions": {
            "ablab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pydantic": pydantic.VERSION,
        },
        "artifacts": {Path(p).name: file_digest(p) for p in sorted(artifacts, key=lambda p: Path(p).name)},
    }
    if extra:
        payload.update(extra)
    return write_json(directory / "manifest.json", payload)
