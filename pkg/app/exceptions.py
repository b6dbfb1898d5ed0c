"""Exception hierarchy shared by the numerical modules and the CLI routers."""


class LabError(Exception):
    """Base class for every error raised by the laboratory."""

    exit_code = 1


class ConfigError(LabError, ValueError):
    """Invalid physical parameters, grid sizes or experiment configuration."""

    exit_code = 2


class MassCriticalError(ConfigError):
    """Raised when p = 3 - rho, where lambda_c is undefined."""


class GridMismatchError(ConfigError):
    """Array shapes or grids do not agree."""


class ConvergenceError(LabError, RuntimeError):
    """An iteration hit its limit or collapsed to the zero field."""

    exit_code = 3


class NumericalGateError(LabError):
    """A numerical acceptance gate (residual, invariant) failed."""

    exit_code = 3


class StorageError(LabError, OSError):
    """Reading or writing an artifact failed."""

    exit_code = 4
