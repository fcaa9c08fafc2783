"""Dichroism extraction from polarimetric transmission and plate lookup tables.

A uniform dichroic cell of thickness ``d`` transmits

    I_ord = exp(-2 alpha_o d) I_0,    I_ext = exp(-2 alpha_e d) I_0,

so ``eta = (alpha_e - alpha_o) d = 0.5 ln(I_ord / I_ext)`` and the global
attenuation ``eta' = (alpha_e + alpha_o) d = -0.5 ln(I_ord I_ext / I_0**2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, MeasurementError
from .walk import PlateParams, Protocol, coin_plate, displacement_plate

__all__ = [
    "DEFAULT_THICKNESS_UM",
    "AVERAGE_PLATE_ETAS",
    "BUILTIN_TABLES",
    "CalibrationSample",
    "PlateRow",
    "PlateTable",
    "extract_eta",
    "extract_eta_prime",
    "absorption_coefficients",
    "synthesize_sample",
    "build_protocol",
    "builtin_tables",
    "read_plate_tables",
    "write_plate_tables",
    "read_samples",
    "PLATE_TABLE_COLUMNS",
]

DEFAULT_THICKNESS_UM = 17.0

#: Batch-averaged dichroism at the six half-wave voltages, lowest voltage first.
AVERAGE_PLATE_ETAS: tuple[float, ...] = (0.57, 0.48, 0.40, 0.31, 0.23, 0.13)

PLATE_TABLE_COLUMNS = ("plate_id", "voltage_label", "delta", "eta", "eta_prime")


@dataclass(frozen=True)
class CalibrationSample:
    """Transmitted powers (linear, arbitrary units) for one plate at one voltage."""

    voltage_label: str
    i_ord: float
    i_ext: float
    i_0: float = 1.0
    thickness_um: float = DEFAULT_THICKNESS_UM


@dataclass(frozen=True)
class PlateRow:
    voltage_label: str
    eta: float
    eta_prime: float
    delta: float = math.pi

    def __post_init__(self) -> None:
        for name in ("eta", "eta_prime", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite for voltage {self.voltage_label!r}")
        if self.eta < 0:
            raise ConfigError(f"eta must be >= 0 for voltage {self.voltage_label!r}, got {self.eta}")
        if self.eta_prime < 0:
            raise ConfigError(f"eta_prime must be >= 0 for voltage {self.voltage_label!r}")

    def plate(self) -> PlateParams:
        return displacement_plate(self.delta, self.eta, self.eta_prime)


@dataclass(frozen=True)
class PlateTable:
    """Calibrated rows of one g-plate, keyed by voltage label."""

    plate_id: str
    rows: tuple[PlateRow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        labels = [r.voltage_label for r in self.rows]
        dupes = sorted({x for x in labels if labels.count(x) > 1})
        if dupes:
            raise ConfigError(f"plate {self.plate_id!r} repeats voltage labels {dupes}")

    @property
    def voltage_labels(self) -> list[str]:
        return [r.voltage_label for r in self.rows]

    def row(self, voltage_label: str) -> PlateRow:
        for r in self.rows:
            if r.voltage_label == voltage_label:
                return r
        raise ConfigError(
            f"plate {self.plate_id!r} has no row for voltage {voltage_label!r} "
            f"(available: {', '.join(self.voltage_labels)})"
        )


def _check_positive(sample: CalibrationSample, *names: str) -> None:
    for name in names:
        value = getattr(sample, name)
        if not (math.isfinite(value) and value > 0):
            raise MeasurementError(
                f"{name} must be a positive finite intensity, got {value!r} "
                f"(voltage {sample.voltage_label!r})"
            )


def extract_eta(sample: CalibrationSample) -> float:
    """Dichroic parameter ``0.5 ln(I_ord / I_ext)``."""
    _check_positive(sample, "i_ord", "i_ext")
    return 0.5 * math.log(sample.i_ord / sample.i_ext)


def extract_eta_prime(sample: CalibrationSample, tol: float = 1e-12) -> float:
    """Global attenuation ``-0.5 ln(I_ord I_ext / I_0^2)``.

    Negative values below ``-tol`` mean net gain, which a passive cell cannot
    produce, so the reference power ``i_0`` must be wrong.
    """
    _check_positive(sample, "i_ord", "i_ext", "i_0")
    value = -0.5 * (math.log(sample.i_ord / sample.i_0) + math.log(sample.i_ext / sample.i_0))
    if value < -tol:
        raise MeasurementError(
            f"negative global attenuation {value:.3g} for voltage {sample.voltage_label!r}: "
            "transmitted power exceeds i_0"
        )
    return max(value, 0.0)


def absorption_coefficients(sample: CalibrationSample) -> tuple[float, float]:
    """``(alpha_o, alpha_e)`` in inverse micrometers."""
    _check_positive(sample, "i_ord", "i_ext", "i_0", "thickness_um")
    two_d = 2.0 * sample.thickness_um
    return (
        -math.log(sample.i_ord / sample.i_0) / two_d,
        -math.log(sample.i_ext / sample.i_0) / two_d,
    )


def synthesize_sample(
    eta: float,
    eta_prime: float,
    i_0: float = 1.0,
    thickness_um: float = DEFAULT_THICKNESS_UM,
    voltage_label: str = "synthetic",
) -> CalibrationSample:
    """Forward transmission model for given ``eta`` and ``eta_prime``."""
    alpha_o = 0.5 * (eta_prime - eta) / thickness_um
    alpha_e = 0.5 * (eta_prime + eta) / thickness_um
    return CalibrationSample(
        voltage_label,
        i_ord=math.exp(-2.0 * alpha_o * thickness_um) * i_0,
        i_ext=math.exp(-2.0 * alpha_e * thickness_um) * i_0,
        i_0=i_0,
        thickness_um=thickness_um,
    )


def builtin_tables() -> dict[str, list[PlateTable]]:
    """Named datasets shipped with the package."""
    rows = tuple(
        PlateRow(f"V{k + 1}", eta, eta, math.pi) for k, eta in enumerate(AVERAGE_PLATE_ETAS)
    )
    return {"paper-fig1c-averages": [PlateTable("average", rows)]}


BUILTIN_TABLES = tuple(builtin_tables())


def build_protocol(
    tables: Sequence[PlateTable],
    voltage_label: str,
    steps: int,
    mode: str = "uniform",
) -> Protocol:
    """Coin-then-displacement protocol for the plates driven at ``voltage_label``.

    ``mode="per-plate"`` gives step ``k`` the row of table ``k``, in stack order.
    ``mode="uniform"`` uses the mean ``(delta, eta, eta_prime)`` of all tables
    at that voltage for every step.
    """
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    if not tables:
        raise ConfigError("no plate tables given")
    rows = [t.row(voltage_label) for t in tables]
    if steps == 0:
        return Protocol((), 0)

    if mode == "per-plate":
        if steps > len(tables):
            raise ConfigError(f"per-plate mode needs {steps} plate tables, got {len(tables)}")
        step_plates = [r.plate() for r in rows[:steps]]
    elif mode == "uniform":
        n = len(rows)
        mean = PlateRow(
            voltage_label,
            eta=sum(r.eta for r in rows) / n,
            eta_prime=sum(r.eta_prime for r in rows) / n,
            delta=sum(r.delta for r in rows) / n,
        )
        step_plates = [mean.plate()] * steps
    else:
        raise ConfigError(f"unknown protocol mode {mode!r}; use 'uniform' or 'per-plate'")

    plates: list[PlateParams] = []
    for p in step_plates:
        plates += [coin_plate(), p]
    return Protocol(tuple(plates), steps)


def _read_rows(path: Path, required: Iterable[str]) -> list[tuple[int, dict[str, str]]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open: {exc.strerror}", source=str(path)) from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ConfigError(f"missing columns {missing}", source=str(path), line=1)
        return [(reader.line_num, row) for row in reader]


def _number(row: dict[str, str], key: str, path: Path, line: int) -> float:
    raw = (row.get(key) or "").strip()
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"column {key!r}: not a number: {raw!r}", source=str(path), line=line) from None
    if not math.isfinite(value):
        raise ConfigError(f"column {key!r}: not finite: {raw!r}", source=str(path), line=line)
    return value


def read_plate_tables(path: str | Path) -> list[PlateTable]:
    """Read ``plate_id,voltage_label,delta,eta,eta_prime`` rows.

    Tables come back in order of first appearance of each ``plate_id``,
    which is taken as the stacking order.  Extra columns are ignored.
    """
    path = Path(path)
    grouped: dict[str, list[PlateRow]] = {}
    for line, row in _read_rows(path, PLATE_TABLE_COLUMNS):
        plate_id = (row["plate_id"] or "").strip()
        label = (row["voltage_label"] or "").strip()
        if not plate_id or not label:
            raise ConfigError("empty plate_id or voltage_label", source=str(path), line=line)
        try:
            entry = PlateRow(
                label,
                eta=_number(row, "eta", path, line),
                eta_prime=_number(row, "eta_prime", path, line),
                delta=_number(row, "delta", path, line),
            )
        except ConfigError as exc:
            if exc.line is not None:
                raise
            raise ConfigError(str(exc), source=str(path), line=line) from None
        grouped.setdefault(plate_id, []).append(entry)
    if not grouped:
        raise ConfigError("no plate rows", source=str(path))
    try:
        return [PlateTable(pid, tuple(rows)) for pid, rows in grouped.items()]
    except ConfigError as exc:
        raise ConfigError(str(exc), source=str(path)) from None


def write_plate_tables(tables: Sequence[PlateTable], path: str | Path) -> None:
    from .tables import fmt

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLATE_TABLE_COLUMNS)
        for t in tables:
            for r in t.rows:
                writer.writerow([t.plate_id, r.voltage_label, fmt(r.delta), fmt(r.eta), fmt(r.eta_prime)])


def read_samples(path: str | Path) -> list[tuple[str, CalibrationSample, float | None]]:
    """Read calibration measurements.

    Required columns: ``plate_id, voltage_label, i_ord, i_ext, i_0``.
    Optional: ``thickness_um`` (default 17) and ``delta`` (radians).
    Returns ``(plate_id, sample, delta_or_None)`` per row.
    """
    path = Path(path)
    out = []
    for line, row in _read_rows(path, ("plate_id", "voltage_label", "i_ord", "i_ext", "i_0")):
        thickness = DEFAULT_THICKNESS_UM
        if (row.get("thickness_um") or "").strip():
            thickness = _number(row, "thickness_um", path, line)
        delta = None
        if (row.get("delta") or "").strip():
            delta = _number(row, "delta", path, line)
        sample = CalibrationSample(
            (row["voltage_label"] or "").strip(),
            i_ord=_number(row, "i_ord", path, line),
            i_ext=_number(row, "i_ext", path, line),
            i_0=_number(row, "i_0", path, line),
            thickness_um=thickness,
        )
        out.append(((row["plate_id"] or "").strip(), sample, delta))
    return out
