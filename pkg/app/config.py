"""Runtime settings and experiment-configuration loading."""
import logging
from pathlib import Path
from typing import Any

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.exceptions import ConfigError, StorageError
from app.schemas.experiment import ExperimentConfig

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


class LabSettings(BaseSettings):
    """
    Process-level settings read from the environment.

    Attributes:
        output_dir: Output directory override (ABLAB_OUTPUT_DIR)
        log_level: Logging level name (ABLAB_LOG_LEVEL)
        workers: Worker processes for fan-out subcommands (ABLAB_WORKERS)
    """

    model_config = SettingsConfigDict(env_prefix="ABLAB_", extra="ignore")

    output_dir: Path | None = None
    log_level: str = "INFO"
    workers: int = 1


def get_settings() -> LabSettings:
    """Build settings from the current environment."""
    return LabSettings()


def _coerce(raw: str) -> Any:
    """Turn a config-file string into a bool, None or list, or leave it for pydantic."""
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null", ""):
        return None
    if "," in raw:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw.strip()


def fold_dotted(pairs: dict[str, str | None]) -> dict[str, Any]:
    """
    Fold flat ``section.key`` pairs into nested dictionaries.

    Args:
        pairs: Flat mapping as read from a key-value file or --set flags

    Returns:
        Nested mapping suitable for ExperimentConfig.model_validate

    Raises:
        ConfigError: If a key is malformed or collides with a section
    """
    nested: dict[str, Any] = {}
    for key, value in pairs.items():
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"Malformed configuration key: {key!r}")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Key {key!r} collides with a scalar value")
            node = child
        node[parts[-1]] = _coerce(value or "")
    return nested


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_overrides(items: list[str] | None) -> dict[str, str]:
    """Parse repeated ``--set section.key=value`` flags."""
    pairs: dict[str, str] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"Override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value
    return pairs


def load_experiment_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig from defaults, a key-value file and overrides.

    Args:
        path: Optional flat key-value file (``params.alpha=0.5`` lines)
        overrides: Optional ``section.key=value`` strings applied last

    Returns:
        Validated experiment configuration

    Raises:
        StorageError: If the file cannot be read
        ConfigError: If the merged configuration does not validate
    """
    data: dict[str, Any] = {}
    if path is not None:
        file_path = Path(path)
        if not file_path.is_file():
            raise StorageError(f"Configuration file not found: {file_path}")
        data = fold_dotted(dotenv_values(file_path))
        logger.debug("Loaded %d configuration sections from %s", len(data), file_path)
    data = _merge(data, fold_dotted(parse_overrides(overrides)))
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def resolve_output_dir(config: ExperimentConfig, cli_output: str | None = None) -> Path:
    """Pick the output directory: CLI flag, then ABLAB_OUTPUT_DIR, then config."""
    if cli_output:
        return Path(cli_output)
    settings = get_settings()
    if settings.output_dir is not None:
        return settings.output_dir
    return Path(config.output.directory)
