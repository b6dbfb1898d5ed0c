"""Initial-data factory and seeded random test fields."""
import logging
import shlex
from typing import Callable, Dict, Optional

import numpy as np

from app.exceptions import ConfigError
from app.models.grid import Field, PolarGrid
from app.schemas.params import PhysParams
from app.storage import read_field_csv

logger = logging.getLogger(__name__)


def gaussian(
    grid: PolarGrid,
    amplitude: float = 1.0,
    width: float = 1.0,
    mode: int = 0,
    params: Optional[PhysParams] = None,
) -> Field:
    """
    amplitude (r/width)^nu exp(-r^2 / (2 width^2)) e^{i mode theta} with nu = |mode + alpha|.

    The r^nu factor keeps the magnetic gradient finite; without params nu = 0.
    """
    if width <= 0.0:
        raise ConfigError(f"Gaussian width must be positive, got {width}")
    nu = abs(mode + params.alpha) if params is not None else 0.0
    r = grid.nodes
    return Field.radial(grid, amplitude * (r / width) ** nu * np.exp(-(r**2) / (2.0 * width**2)), mode=mode)


def random_field(grid: PolarGrid, rng: np.random.Generator, max_modes: int = 3) -> Field:
    """
    Smooth pseudo-random field supported on a few angular modes.

    Each active mode carries a complex multiple of r^{|m| + 1/2} exp(-r^2 / (2 s^2))
    with a random width s.
    """
    half = grid.n_modes // 2
    candidates = np.arange(-half, half + 1)
    count = min(max_modes, candidates.size)
    active = rng.choice(candidates, size=count, replace=False)
    r = grid.nodes
    values = np.zeros(grid.shape, dtype=complex)
    for m in sorted(active.tolist()):
        width = rng.uniform(0.5, 2.0)
        coeff = complex(rng.normal(), rng.normal())
        radial = (r / width) ** (abs(m) + 0.5) * np.exp(-(r**2) / (2.0 * width**2))
        values += coeff * np.outer(radial, np.exp(1j * m * grid.theta))
    return Field(grid, values)


class InitialDataFactory:
    """
    Registry of initial-data kinds parsed from spec strings.

    Supported strings: ``gaussian [amplitude [width [mode]]]``,
    ``scaled_ground_state c`` and ``file PATH``.
    """

    _builders: Dict[str, Callable[..., Field]] = {}

    @classmethod
    def register(cls, kind: str):
        def decorator(builder):
            cls._builders[kind] = builder
            return builder
        return decorator

    @classmethod
    def create(cls, spec: str, grid: PolarGrid, params: PhysParams, gs=None) -> Field:
        """
        Build an initial field from a spec string.

        Args:
            spec: Initial-data spec string
            grid: Grid for analytic data
            params: Physical parameters
            gs: Ground state, required by scaled_ground_state

        Returns:
            Initial field (file data keeps the grid stored in the file)

        Raises:
            ConfigError: If the spec is malformed
            StorageError: If a file cannot be read
        """
        tokens = shlex.split(spec or "")
        if not tokens:
            raise ConfigError("Empty initial-data spec")
        builder = cls._builders.get(tokens[0])
        if builder is None:
            raise ConfigError(f"Unsupported initial data: {tokens[0]}; expected one of {cls.get_supported_kinds()}")
        return builder(grid, params, gs, tokens[1:])

    @classmethod
    def get_supported_kinds(cls) -> list[str]:
        return sorted(cls._builders)


def _floats(args: list[str], names: tuple[str, ...]) -> list[float]:
    if len(args) > len(names):
        raise ConfigError(f"Too many arguments; expected at most {', '.join(names)}")
    try:
        return [float(a) for a in args]
    except ValueError as e:
        raise ConfigError(f"Initial-data arguments must be numbers: {args}") from e


@InitialDataFactory.register("gaussian")
def _gaussian(grid: PolarGrid, params: PhysParams, gs, args: list[str]) -> Field:
    values = _floats(args, ("amplitude", "width", "mode"))
    amplitude, width, mode = (values + [1.0, 1.0, 0.0][len(values):])[:3]
    if mode != int(mode):
        raise ConfigError(f"Gaussian mode must be an integer, got {mode}")
    return gaussian(grid, amplitude, width, int(mode), params)


@InitialDataFactory.register("scaled_ground_state")
def _scaled_ground_state(grid: PolarGrid, params: PhysParams, gs, args: list[str]) -> Field:
    if gs is None:
        raise ConfigError("scaled_ground_state needs a ground state for these parameters")
    values = _floats(args, ("c",))
    if len(values) != 1:
        raise ConfigError("scaled_ground_state takes exactly one amplitude c")
    return gs.on_grid(grid).scaled(values[0])


@InitialDataFactory.register("file")
def _from_file(grid: PolarGrid, params: PhysParams, gs, args: list[str]) -> Field:
    if len(args) != 1:
        raise ConfigError("file takes exactly one path")
    field = read_field_csv(args[0])
    logger.info("Loaded initial data on grid %s from %s", field.grid, args[0])
    return field


def initial_field(spec: str, grid: PolarGrid, params: PhysParams, gs: Optional[object] = None) -> Field:
    """Convenience wrapper around InitialDataFactory.create."""
    return InitialDataFactory.create(spec, grid, params, gs)
