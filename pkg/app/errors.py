"""Exception hierarchy for the relaxation laboratory."""

from typing import Optional


class RelaxLabError(Exception):
    """Base class for all laboratory errors."""


class PositivityError(RelaxLabError, ValueError):
    """Raised when a state leaves the small-data regime (pressure or density too close to zero)."""

    def __init__(
        self,
        message: str,
        min_pressure: Optional[float] = None,
        min_density: Optional[float] = None
    ):
        super().__init__(message)
        self.min_pressure = min_pressure
        self.min_density = min_density


class StepSizeError(RelaxLabError, ValueError):
    """Raised when a time step violates its stability limit."""

    def __init__(self, message: str, dt: float, limit: float):
        super().__init__(message)
        self.dt = dt
        self.limit = limit


class SolverError(RelaxLabError):
    """A step failure annotated with the slow time at which it happened."""

    def __init__(self, message: str, t: float, cause: Optional[Exception] = None):
        super().__init__(f"{message} (t={t:.6g})")
        self.t = t
        self.cause = cause


class CheckpointFormatError(RelaxLabError):
    """Raised when a checkpoint file is malformed; names the offending block."""

    def __init__(self, message: str, block: str):
        super().__init__(f"{message} [block={block}]")
        self.block = block


class ConfigError(RelaxLabError, ValueError):
    """Raised for unreadable or invalid experiment configuration."""
