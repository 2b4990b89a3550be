"""Exception types shared across the package."""


class SDError(Exception):
    """Base class for all package errors."""


class GridError(SDError, ValueError):
    """Invalid grid construction (dimension, point count or extent)."""


class FieldError(SDError, ValueError):
    """Field shape mismatch or non-finite samples."""


class MultiplierError(SDError, ValueError):
    """A Fourier multiplier evaluated to a non-finite value."""


class IntegrationDiverged(SDError, RuntimeError):
    """A time integration produced non-finite samples.

    ``time`` is the simulation time at which the bad step was detected.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


class NoContraction(SDError, RuntimeError):
    """Picard iteration failed to contract within the iteration budget."""


class AliasingError(SDError, ValueError):
    """Resampling onto a coarser grid would discard resolved content."""


class RegionError(SDError, ValueError):
    """Sobolev indices (s, ell) fall outside the well-posedness region."""


class ConfigError(SDError, ValueError):
    """Configuration file or override is malformed or inconsistent."""


class SnapshotError(SDError, IOError):
    """Snapshot file is unreadable, truncated, or has a bad header."""


class InvariantViolation(SDError, RuntimeError):
    """A numerically checked bound failed (e.g. f(t) above its envelope)."""
