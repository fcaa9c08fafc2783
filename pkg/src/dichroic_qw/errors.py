"""Exception types raised across the package."""

from __future__ import annotations


class WalkError(ValueError):
    """Base class for every error raised by ``dichroic_qw``."""


class InvalidStateError(WalkError):
    """A walker state or plate parameter set violates its invariants."""


class ExtinctWalkerError(WalkError):
    """The walker has been (numerically) fully absorbed."""


class AliasingError(WalkError):
    """The momentum grid is too coarse to represent the evolved state."""


class FitError(WalkError):
    """A spreading-exponent fit was refused."""


class MeasurementError(WalkError):
    """Calibration intensities are unphysical or mutually inconsistent."""


class ConfigError(WalkError):
    """Invalid configuration, plate table, or reference file.

    ``line`` is the 1-based line in the offending file when it is known.
    """

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = source if line is None else f"{source}:{line}"
        elif line is not None:
            where = f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
