"""Command-line entry point: groundstate | evolve | dichotomy | check."""
import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from app import __version__
from app.config import get_settings, load_experiment_config, resolve_output_dir
from app.exceptions import ConfigError, LabError, StorageError
from app.routers.check import cmd_check
from app.routers.dichotomy import DEFAULT_AMPLITUDES, cmd_dichotomy
from app.routers.evolve import cmd_evolve
from app.routers.groundstate import cmd_groundstate

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ablab",
        description="Aharonov-Bohm inhomogeneous NLS laboratory",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="Key-value experiment file (section.key=value)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override one configuration value; may be repeated")
    parser.add_argument("--output", default=None, help="Output directory (overrides ABLAB_OUTPUT_DIR)")
    parser.add_argument("--log-level", default=None, help="Logging level (overrides ABLAB_LOG_LEVEL)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("groundstate", help="Compute the ground state and K_opt")
    evolve = sub.add_parser("evolve", help="Evolve initial data and run the monitors")
    evolve.add_argument("initial", nargs="?", default="gaussian",
                        help="gaussian [amplitude [width [mode]]] | scaled_ground_state c | file PATH")
    dichotomy = sub.add_parser("dichotomy", help="Predicted versus observed dynamics of c * phi")
    dichotomy.add_argument("--amplitudes", type=float, nargs="+", default=list(DEFAULT_AMPLITUDES))
    sub.add_parser("check", help="Run the invariant battery")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments, dispatch the subcommand and map failures to exit codes.

    Returns:
        0 on success, 2 for configuration errors, 3 for failed numerical gates,
        4 for I/O errors and any other unexpected failure
    """
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"error: invalid environment settings: {e}", file=sys.stderr)
        return ConfigError.exit_code
    configure_logging(args.log_level or settings.log_level)

    try:
        config = load_experiment_config(args.config, args.overrides)
        output_dir = resolve_output_dir(config, args.output)
        if args.command == "groundstate":
            cmd_groundstate(config, output_dir)
        elif args.command == "evolve":
            cmd_evolve(config, output_dir, args.initial)
        elif args.command == "dichotomy":
            cmd_dichotomy(config, output_dir, args.amplitudes)
        else:
            cmd_check(config, output_dir)
    except LabError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return ConfigError.exit_code
    except Exception as e:
        logger.exception("%s failed unexpectedly", args.command)
        print(f"error: unexpected failure: {e}", file=sys.stderr)
        return StorageError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
