"""Config-driven runs behind the command-line subcommands.

Each ``run_*`` function is pure and returns a result object; the matching
``write_*`` function renders it to CSV files in an output directory.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import ProbabilityDistribution, distribution, similarity, spreading_exponent, variance
from .calibration import (
    PlateRow,
    PlateTable,
    absorption_coefficients,
    extract_eta,
    extract_eta_prime,
    read_samples,
)
from .config import ExperimentConfig, spectrum_parameters
from .errors import ConfigError, MeasurementError, WalkError
from .spectral import BlochSpectrum, q_grid, quasi_energies
from .tables import distribution_rows, read_distributions, write_csv
from .walk import Protocol, WalkState, evolve, make_localized_state

__all__ = [
    "SimulationResult",
    "CompareResult",
    "SpectrumResult",
    "SweepPoint",
    "CalibrationResult",
    "simulate_protocol",
    "run_simulate",
    "run_compare",
    "run_spectrum",
    "run_sweep",
    "run_calibrate",
    "write_simulation",
    "write_compare",
    "write_spectrum",
    "write_sweep",
    "write_calibration",
]

DISTRIBUTION_COLUMNS = ("step", "site", "probability")
SUMMARY_COLUMNS = ("step", "survival", "mean", "variance")
SIMILARITY_COLUMNS = ("step", "similarity")
SPECTRUM_COLUMNS = ("q", "re_energy", "im_energy", "gap", "overlap", "exceptional")
CALIBRATION_COLUMNS = (
    "plate_id", "voltage_label", "delta", "eta", "eta_prime", "alpha_o_per_um", "alpha_e_per_um",
)


@dataclass(frozen=True)
class SimulationResult:
    protocol: Protocol
    states: tuple[WalkState, ...]
    distributions: tuple[ProbabilityDistribution, ...]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def variances(self) -> list[float]:
        return [variance(d) for d in self.distributions]

    @property
    def survivals(self) -> list[float]:
        return [d.survival for d in self.distributions]

    def summary_rows(self) -> list[tuple[int, float, float, float]]:
        return [
            (t, d.survival, d.mean(), variance(d)) for t, d in enumerate(self.distributions)
        ]

    def spreading_exponent(self) -> float:
        return spreading_exponent([(t, v) for t, v in enumerate(self.variances) if t >= 1])


@dataclass(frozen=True)
class CompareResult:
    similarities: dict[int, float]
    threshold: float | None

    @property
    def passed(self) -> bool:
        if self.threshold is None:
            return True
        return all(s >= self.threshold for s in self.similarities.values())


@dataclass(frozen=True)
class SpectrumResult:
    delta: float
    eta: float
    eta_prime: float
    spectrum: BlochSpectrum

    def rows(self) -> list[tuple[float, float, float, float, float, bool]]:
        s = self.spectrum
        return [
            (float(q), float(e.real), float(e.imag), float(g), float(o), bool(x))
            for q, e, g, o, x in zip(s.q_grid, s.energies, s.gap, s.eigenvector_overlap, s.exceptional)
        ]


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    value: Any
    result: SimulationResult


@dataclass(frozen=True)
class CalibrationResult:
    tables: tuple[PlateTable, ...]
    alphas: dict[tuple[str, str], tuple[float, float]]


def simulate_protocol(coin: Sequence[complex] | np.ndarray | str, protocol: Protocol) -> SimulationResult:
    states = tuple(evolve(make_localized_state(coin), protocol))
    return SimulationResult(protocol, states, tuple(distribution(s) for s in states))


def run_simulate(config: ExperimentConfig) -> SimulationResult:
    return simulate_protocol(config.input_coin, config.protocol)


def run_compare(
    config: ExperimentConfig,
    reference: str | Path | dict[int, ProbabilityDistribution] | None = None,
    threshold: float | None = None,
    simulation: SimulationResult | None = None,
) -> CompareResult:
    """Per-step similarity between the simulated walk and reference distributions."""
    if reference is None:
        reference = config.reference
    if reference is None:
        raise ConfigError("compare needs reference distributions ('reference' in the config)", source=config.source)
    refs = reference if isinstance(reference, dict) else read_distributions(reference)
    if threshold is None:
        threshold = config.similarity_threshold
    sim = simulation or run_simulate(config)
    out = {}
    for step, ref in sorted(refs.items()):
        if not 0 <= step <= sim.steps:
            raise ConfigError(f"reference step {step} outside simulated range 0..{sim.steps}")
        out[step] = similarity(sim.distributions[step], ref)
    return CompareResult(out, threshold)


def run_spectrum(config: ExperimentConfig, grid: int | None = None) -> SpectrumResult:
    n = config.spectrum.grid if grid is None else grid
    if n < 16:
        raise ConfigError(f"spectrum grid must have >= 16 points, got {n}")
    delta, eta, eta_prime = spectrum_parameters(config)
    return SpectrumResult(delta, eta, eta_prime, quasi_energies(delta, eta, eta_prime, q_grid(n)))


def run_sweep(config: ExperimentConfig, threads: int = 1) -> list[SweepPoint]:
    """One simulation per sweep value, in the order the values were given."""
    if config.sweep is None:
        raise ConfigError("sweep needs a 'sweep' section in the config", source=config.source)
    parameter = config.sweep.parameter

    def one(value: Any) -> SweepPoint:
        protocol = config.protocol_source.with_value(parameter, value).build(config.steps)
        return SweepPoint(parameter, value, simulate_protocol(config.input_coin, protocol))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, config.sweep.values))
    return [one(v) for v in config.sweep.values]


def run_calibrate(samples: str | Path, default_delta: float = math.pi) -> CalibrationResult:
    """Extract ``(eta, eta_prime)`` for every measured sample, grouped per plate."""
    grouped: dict[str, list[PlateRow]] = {}
    alphas = {}
    for plate_id, sample, delta in read_samples(samples):
        eta = extract_eta(sample)
        if eta < 0:
            raise MeasurementError(
                f"plate {plate_id!r}, voltage {sample.voltage_label!r}: extraordinary wave "
                f"transmits more than ordinary (eta = {eta:.6g}); gain is not modelled"
            )
        row = PlateRow(
            sample.voltage_label,
            eta=eta,
            eta_prime=extract_eta_prime(sample),
            delta=default_delta if delta is None else delta,
        )
        grouped.setdefault(plate_id, []).append(row)
        alphas[(plate_id, sample.voltage_label)] = absorption_coefficients(sample)
    tables = tuple(PlateTable(pid, tuple(rows)) for pid, rows in grouped.items())
    return CalibrationResult(tables, alphas)


def write_simulation(result: SimulationResult, out_dir: str | Path, outputs: Sequence[str] | frozenset[str]) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "distributions" in outputs:
        written.append(
            write_csv(out / "distributions.csv", DISTRIBUTION_COLUMNS,
                      distribution_rows(dict(enumerate(result.distributions))))
        )
    if "variance" in outputs:
        written.append(write_csv(out / "summary.csv", SUMMARY_COLUMNS, result.summary_rows()))
    return written


def write_compare(result: CompareResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return write_csv(out / "similarity.csv", SIMILARITY_COLUMNS, sorted(result.similarities.items()))


def write_spectrum(result: SpectrumResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, result.rows())


def write_sweep(points: Sequence[SweepPoint], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary, dists, exponents = [], [], []
    for i, p in enumerate(points):
        for step, surv, mean, var in p.result.summary_rows():
            summary.append((i, p.parameter, p.value, step, surv, mean, var))
        for step, site, prob in distribution_rows(dict(enumerate(p.result.distributions))):
            dists.append((i, p.value, step, site, prob))
        try:
            alpha: float = p.result.spreading_exponent()
        except WalkError:
            alpha = math.nan
        exponents.append((i, p.parameter, p.value, alpha))
    return [
        write_csv(out / "sweep_summary.csv",
                  ("point", "parameter", "value", "step", "survival", "mean", "variance"), summary),
        write_csv(out / "sweep_distributions.csv",
                  ("point", "value", "step", "site", "probability"), dists),
        write_csv(out / "sweep_exponents.csv",
                  ("point", "parameter", "value", "spreading_exponent"), exponents),
    ]


def write_calibration(result: CalibrationResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for t in result.tables:
        for r in t.rows:
            a_o, a_e = result.alphas[(t.plate_id, r.voltage_label)]
            rows.append((t.plate_id, r.voltage_label, r.delta, r.eta, r.eta_prime, a_o, a_e))
    return write_csv(out / "calibration.csv", CALIBRATION_COLUMNS, rows)
