"""JSON experiment configuration.

A minimal document::

    {
      "schema_version": 1,
      "input": "H",
      "steps": 5,
      "protocol": {"delta": "pi", "eta": 0.57}
    }

``protocol`` takes one of three forms:

* walk parameters ``{"delta", "eta", "eta_prime", "eta_prime_mode"}``; ``eta``
  and ``delta`` may be per-step lists, ``eta_prime_mode`` is ``"passive"``
  (``eta_prime = eta``, default) or ``"neglect"`` (``eta_prime = 0``);
* an inline per-step plate list ``{"plates": [{"kind": "coin"}, ...]}``
  repeated ``steps`` times;
* a calibration table ``{"table": NAME_OR_CSV, "voltage_label", "mode"}``.

Angles may be written as numbers or as simple expressions of ``pi``
(``"pi"``, ``"pi/2"``, ``"3*pi/4"``).  Relative paths resolve against the
config file's directory.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .calibration import (
    AVERAGE_PLATE_ETAS,
    PlateTable,
    build_protocol,
    builtin_tables,
    read_plate_tables,
)
from .errors import ConfigError, WalkError
from .walk import (
    PlateKind,
    PlateParams,
    Protocol,
    coin_plate,
    displacement_plate,
    named_coin_state,
    walk_protocol,
)

__all__ = [
    "SCHEMA_VERSION",
    "OUTPUT_KINDS",
    "ExperimentConfig",
    "ProtocolSource",
    "SpectrumSettings",
    "SweepSettings",
    "load_config",
    "parse_config",
    "parse_angle",
    "spectrum_parameters",
]

SCHEMA_VERSION = 1
OUTPUT_KINDS = frozenset({"distributions", "variance", "similarity", "spectrum"})
DEFAULT_OUTPUTS = frozenset({"distributions", "variance"})
SWEEP_PARAMETERS = ("eta", "delta", "voltage_label")

_BINOPS = {ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Add: operator.add, ast.Sub: operator.sub}


def parse_angle(value: Any) -> float:
    """Number, or an arithmetic expression over numbers and ``pi``."""
    if isinstance(value, bool):
        raise ValueError("booleans are not angles")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a number or expression, got {value!r}")

    def ev(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported expression {value!r}")

    try:
        return float(ev(ast.parse(value.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError):
        raise ValueError(f"cannot parse {value!r}") from None


@dataclass(frozen=True)
class SpectrumSettings:
    grid: int = 257
    delta: float | None = None
    eta: float | None = None
    eta_prime: float | None = None


@dataclass(frozen=True)
class SweepSettings:
    parameter: str
    values: tuple[Any, ...]


@dataclass(frozen=True)
class ProtocolSource:
    """Declarative protocol description; ``build(steps)`` makes the :class:`Protocol`."""

    kind: str  # "walk" | "plates" | "table"
    delta: float | tuple[float, ...] = math.pi
    eta: float | tuple[float, ...] = 0.0
    eta_prime: float | tuple[float, ...] | None = None
    step_plates: tuple[PlateParams, ...] = ()
    tables: tuple[PlateTable, ...] = ()
    voltage_label: str | None = None
    mode: str = "uniform"

    def build(self, steps: int) -> Protocol:
        if self.kind == "walk":
            return walk_protocol(steps, self.delta, self.eta, self.eta_prime)
        if self.kind == "plates":
            return Protocol.repeat(self.step_plates, steps)
        assert self.voltage_label is not None
        return build_protocol(self.tables, self.voltage_label, steps, self.mode)

    def with_value(self, parameter: str, value: Any) -> "ProtocolSource":
        if parameter == "voltage_label":
            if self.kind != "table":
                raise ConfigError("a voltage_label sweep needs a table protocol")
            return replace(self, voltage_label=str(value))
        if self.kind != "walk":
            raise ConfigError(f"an {parameter} sweep needs a walk-parameter protocol")
        if parameter == "eta":
            # eta_prime=None keeps tracking the swept eta; an explicit value stays fixed
            return replace(self, eta=float(value))
        return replace(self, delta=float(value))


@dataclass(frozen=True)
class ExperimentConfig:
    input_coin: NDArray[np.complex128]
    steps: int
    protocol_source: ProtocolSource
    outputs: frozenset[str] = DEFAULT_OUTPUTS
    reference: Path | None = None
    similarity_threshold: float | None = None
    spectrum: SpectrumSettings = field(default_factory=SpectrumSettings)
    sweep: SweepSettings | None = None
    samples: Path | None = None
    source: str | None = None

    @property
    def protocol(self) -> Protocol:
        return self.protocol_source.build(self.steps)


class _Context:
    """Turns JSON paths into messages with the best-guess line number."""

    def __init__(self, text: str, source: str | None):
        self.lines = text.splitlines()
        self.source = source

    def error(self, key_path: str, message: str) -> ConfigError:
        key = key_path.split(".")[-1].split("[")[0]
        line = None
        if key:
            needle = f'"{key}"'
            for i, text in enumerate(self.lines, 1):
                if needle in text:
                    line = i
                    break
        return ConfigError(f"{key_path}: {message}", source=self.source, line=line)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, base_dir=path.parent, source=str(path))


def parse_config(text: str, base_dir: str | Path = ".", source: str | None = None) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", source=source, line=exc.lineno) from None
    ctx = _Context(text, source)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", source=source, line=1)
    base = Path(base_dir)

    known = {
        "schema_version", "input", "steps", "protocol", "outputs", "reference",
        "similarity_threshold", "spectrum", "sweep", "samples", "description",
    }
    for key in data:
        if key not in known:
            raise ctx.error(key, f"unknown key (allowed: {', '.join(sorted(known))})")

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ctx.error("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    steps = data.get("steps", 1)
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
        raise ctx.error("steps", f"must be an integer >= 1, got {steps!r}")

    coin = _parse_input(ctx, data.get("input", "H"))
    protocol_source = _parse_protocol(ctx, data.get("protocol", {}), steps, base)

    outputs_raw = data.get("outputs", sorted(DEFAULT_OUTPUTS))
    if not isinstance(outputs_raw, list) or not all(isinstance(o, str) for o in outputs_raw):
        raise ctx.error("outputs", "must be a list of strings")
    bad = sorted(set(outputs_raw) - OUTPUT_KINDS)
    if bad:
        raise ctx.error("outputs", f"unknown output kinds {bad} (allowed: {sorted(OUTPUT_KINDS)})")

    reference = _parse_path(ctx, "reference", data.get("reference"), base)
    samples = _parse_path(ctx, "samples", data.get("samples"), base)

    threshold = data.get("similarity_threshold")
    if threshold is not None:
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)) or not 0 <= threshold <= 1:
            raise ctx.error("similarity_threshold", f"must be a number in [0, 1], got {threshold!r}")
        threshold = float(threshold)

    spectrum = _parse_spectrum(ctx, data.get("spectrum", {}))
    sweep = _parse_sweep(ctx, data.get("sweep"), protocol_source)

    return ExperimentConfig(
        input_coin=coin,
        steps=steps,
        protocol_source=protocol_source,
        outputs=frozenset(outputs_raw),
        reference=reference,
        similarity_threshold=threshold,
        spectrum=spectrum,
        sweep=sweep,
        samples=samples,
        source=source,
    )


def _parse_path(ctx: _Context, key: str, value: Any, base: Path) -> Path | None:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ctx.error(key, "must be a file path string")
    p = Path(value)
    return p if p.is_absolute() else base / p


def _parse_complex(value: Any) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ValueError(value)


def _parse_input(ctx: _Context, value: Any) -> NDArray[np.complex128]:
    if isinstance(value, str):
        try:
            return named_coin_state(value)
        except WalkError as exc:
            raise ctx.error("input", str(exc)) from None
    if isinstance(value, list) and len(value) == 2:
        try:
            coin = np.array([_parse_complex(v) for v in value], dtype=np.complex128)
        except ValueError:
            raise ctx.error("input", "entries must be numbers or [re, im] pairs") from None
        norm = np.linalg.norm(coin)
        if not np.isfinite(norm) or norm == 0:
            raise ctx.error("input", "coin amplitudes must have nonzero norm")
        return coin / norm
    raise ctx.error("input", 'must be "H", "L", "R" or a pair of (L, R) amplitudes')


def _angles(ctx: _Context, key: str, value: Any, steps: int, *, nonneg: bool) -> float | tuple[float, ...]:
    try:
        if isinstance(value, list):
            parsed: float | tuple[float, ...] = tuple(parse_angle(v) for v in value)
            if len(parsed) != steps:
                raise ctx.error(key, f"has {len(parsed)} entries but steps = {steps}")
            values = list(parsed)
        else:
            parsed = parse_angle(value)
            values = [parsed]
    except ValueError as exc:
        raise ctx.error(key, str(exc)) from None
    if not all(math.isfinite(v) for v in values):
        raise ctx.error(key, "must be finite")
    if nonneg and any(v < 0 for v in values):
        raise ctx.error(key, "must be >= 0")
    return parsed


def _parse_protocol(ctx: _Context, section: Any, steps: int, base: Path) -> ProtocolSource:
    if not isinstance(section, dict):
        raise ctx.error("protocol", "must be an object")
    if "plates" in section:
        return _parse_plates(ctx, section)
    if "table" in section:
        return _parse_table(ctx, section, steps, base)

    allowed = {"delta", "eta", "eta_prime", "eta_prime_mode"}
    for key in section:
        if key not in allowed:
            raise ctx.error(f"protocol.{key}", f"unknown key (allowed: {sorted(allowed)})")
    delta = _angles(ctx, "protocol.delta", section.get("delta", "pi"), steps, nonneg=False)
    eta = _angles(ctx, "protocol.eta", section.get("eta", 0.0), steps, nonneg=True)
    mode = section.get("eta_prime_mode", "passive")
    if mode not in ("passive", "neglect"):
        raise ctx.error("protocol.eta_prime_mode", f"must be 'passive' or 'neglect', got {mode!r}")
    eta_prime: float | tuple[float, ...] | None = None
    if section.get("eta_prime") is not None:
        if "eta_prime_mode" in section:
            raise ctx.error("protocol.eta_prime", "give either eta_prime or eta_prime_mode, not both")
        eta_prime = _angles(ctx, "protocol.eta_prime", section["eta_prime"], steps, nonneg=True)
    elif mode == "neglect":
        eta_prime = 0.0
    source = ProtocolSource("walk", delta=delta, eta=eta, eta_prime=eta_prime)
    try:
        source.build(steps)
    except WalkError as exc:
        raise ctx.error("protocol", str(exc)) from None
    return source


def _parse_plates(ctx: _Context, section: dict) -> ProtocolSource:
    raw = section["plates"]
    if not isinstance(raw, list) or not raw:
        raise ctx.error("protocol.plates", "must be a nonempty list")
    plates = []
    for i, item in enumerate(raw):
        where = f"protocol.plates[{i}]"
        if not isinstance(item, dict) or item.get("kind") not in ("coin", "displacement"):
            raise ctx.error(where, 'each plate needs "kind": "coin" or "displacement"')
        try:
            if item["kind"] == "coin":
                extra = set(item) - {"kind"}
                if extra:
                    raise ctx.error(where, f"coin plates take no parameters, got {sorted(extra)}")
                plates.append(coin_plate())
            else:
                eta_prime = item.get("eta_prime")
                plates.append(
                    displacement_plate(
                        parse_angle(item.get("delta", "pi")),
                        parse_angle(item.get("eta", 0.0)),
                        None if eta_prime is None else parse_angle(eta_prime),
                    )
                )
        except (ValueError, WalkError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ctx.error(where, str(exc)) from None
    return ProtocolSource("plates", step_plates=tuple(plates))


def _parse_table(ctx: _Context, section: dict, steps: int, base: Path) -> ProtocolSource:
    name = section["table"]
    if not isinstance(name, str):
        raise ctx.error("protocol.table", "must be a dataset name or CSV path")
    builtins = builtin_tables()
    if name in builtins:
        tables = builtins[name]
    else:
        path = Path(name) if Path(name).is_absolute() else base / name
        tables = read_plate_tables(path)
    label = section.get("voltage_label")
    if not isinstance(label, str):
        raise ctx.error("protocol.voltage_label", "required string for table protocols")
    mode = section.get("mode", "uniform")
    source = ProtocolSource("table", tables=tuple(tables), voltage_label=label, mode=mode)
    try:
        source.build(steps)
    except ConfigError as exc:
        raise ctx.error("protocol", str(exc)) from None
    return source


def _parse_spectrum(ctx: _Context, section: Any) -> SpectrumSettings:
    if not isinstance(section, dict):
        raise ctx.error("spectrum", "must be an object")
    grid = section.get("grid", 257)
    if not isinstance(grid, int) or isinstance(grid, bool) or grid < 16:
        raise ctx.error("spectrum.grid", f"must be an integer >= 16, got {grid!r}")
    values = {}
    for key in ("delta", "eta", "eta_prime"):
        if section.get(key) is not None:
            try:
                values[key] = parse_angle(section[key])
            except ValueError as exc:
                raise ctx.error(f"spectrum.{key}", str(exc)) from None
    if values.get("eta", 0.0) < 0:
        raise ctx.error("spectrum.eta", "must be >= 0")
    return SpectrumSettings(grid=grid, **values)


def _parse_sweep(ctx: _Context, section: Any, source: ProtocolSource) -> SweepSettings | None:
    if section is None:
        return None
    if not isinstance(section, dict):
        raise ctx.error("sweep", "must be an object")
    parameter = section.get("parameter", "eta")
    if parameter not in SWEEP_PARAMETERS:
        raise ctx.error("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}")
    if "values" in section:
        raw = section["values"]
        if not isinstance(raw, list) or not raw:
            raise ctx.error("sweep.values", "must be a nonempty list")
    elif parameter == "eta":
        raw = list(AVERAGE_PLATE_ETAS)
    elif parameter == "voltage_label" and source.kind == "table":
        raw = source.tables[0].voltage_labels
    else:
        raise ctx.error("sweep.values", f"required for a {parameter} sweep")

    values: list[Any] = []
    for i, v in enumerate(raw):
        if parameter == "voltage_label":
            if not isinstance(v, str):
                raise ctx.error(f"sweep.values[{i}]", "voltage labels must be strings")
            values.append(v)
            continue
        try:
            x = parse_angle(v)
        except ValueError as exc:
            raise ctx.error(f"sweep.values[{i}]", str(exc)) from None
        if parameter == "eta" and x < 0:
            raise ctx.error(f"sweep.values[{i}]", "eta must be >= 0")
        values.append(x)
    try:
        for v in values:
            source.with_value(parameter, v).build(1)
    except WalkError as exc:
        raise ctx.error("sweep", str(exc)) from None
    return SweepSettings(parameter, tuple(values))


def spectrum_parameters(config: ExperimentConfig) -> tuple[float, float, float]:
    """``(delta, eta, eta_prime)`` for the spectrum: explicit settings, else the first g-plate."""
    s = config.spectrum
    plates = [p for p in config.protocol.plates if p.kind is PlateKind.DISPLACEMENT]
    first = plates[0] if plates else displacement_plate(math.pi)
    delta = first.delta if s.delta is None else s.delta
    eta = first.eta if s.eta is None else s.eta
    if s.eta_prime is not None:
        eta_prime = s.eta_prime
    elif s.eta is not None:
        eta_prime = eta
    else:
        eta_prime = first.eta_prime
    return delta, eta, eta_prime
