"""Command-line front end.

Exit status: 0 success, 2 configuration error, 3 similarity below the
acceptance threshold, 1 any other simulation error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ExperimentConfig, load_config, parse_angle
from .errors import ConfigError, WalkError
from .runner import (
    run_calibrate,
    run_compare,
    run_simulate,
    run_spectrum,
    run_sweep,
    write_calibration,
    write_compare,
    write_simulation,
    write_spectrum,
    write_sweep,
)

log = logging.getLogger("dichroic_qw")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3


def _common(p: argparse.ArgumentParser, *, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="experiment JSON file")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps (default 1)")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved; the dynamics are deterministic and ignore it")
    p.add_argument("--figures", action="store_true", help="also render PNG figures into --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dichroic-qw",
        description="Simulate non-Hermitian quantum walks with dichroic displacement plates.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve the walker and write per-step distributions")
    _common(p)

    p = sub.add_parser("compare", help="similarity of the simulation against reference distributions")
    _common(p)
    p.add_argument("--reference", type=Path, help="step,site,probability CSV (overrides the config)")
    p.add_argument("--threshold", type=float, help="minimum per-step similarity for exit status 0")

    p = sub.add_parser("spectrum", help="complex quasi-energy bands of the step operator")
    _common(p)
    p.add_argument("--grid", type=int, help="number of momenta on [-pi, pi) (>= 16)")

    p = sub.add_parser("calibrate", help="extract eta and eta' from transmission measurements")
    _common(p, config_required=False)
    p.add_argument("--samples", type=Path, help="measurement CSV (overrides the config)")
    p.add_argument("--delta", default="pi", help="retardation for rows without a delta column")

    p = sub.add_parser("sweep", help="repeat the simulation over a list of parameter values")
    _common(p)
    return parser


def _figures_simulate(cfg: ExperimentConfig, result, out: Path) -> list[Path]:
    from . import report

    paths = [report.plot_variance([("simulation", result.variances)], out / "variance.png")]
    if "distributions" in cfg.outputs:
        paths.append(report.plot_distributions(result, out / "distributions.png"))
    return paths


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    result = run_simulate(cfg)
    written = write_simulation(result, args.out, cfg.outputs)
    if "spectrum" in cfg.outputs:
        written.append(write_spectrum(run_spectrum(cfg), args.out))
    status = EXIT_OK
    if "similarity" in cfg.outputs and cfg.reference is not None:
        cmp = run_compare(cfg, simulation=result)
        written.append(write_compare(cmp, args.out))
        status = EXIT_OK if cmp.passed else EXIT_THRESHOLD
    if args.figures:
        written += _figures_simulate(cfg, result, args.out)
    _report(written)
    return status


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    result = run_compare(cfg, reference=args.reference, threshold=args.threshold)
    written = [write_compare(result, args.out)]
    if args.figures:
        from . import report

        written.append(report.plot_similarity(result.similarities, args.out / "similarity.png", result.threshold))
    _report(written)
    for step, s in sorted(result.similarities.items()):
        log.info("step %d: S = %.6f", step, s)
    if not result.passed:
        worst = min(result.similarities.items(), key=lambda kv: kv[1])
        log.error("similarity %.6f at step %d is below threshold %.6g", worst[1], worst[0], result.threshold)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    result = run_spectrum(cfg, grid=args.grid)
    written = [write_spectrum(result, args.out)]
    n_exc = int(result.spectrum.exceptional.sum())
    if n_exc:
        log.warning("%d momenta flagged as exceptional (eigenvalue gap < 1e-9)", n_exc)
    if args.figures:
        from . import report

        written.append(report.plot_spectrum(result, args.out / "spectrum.png"))
    _report(written)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    samples = args.samples
    if samples is None and args.config is not None:
        samples = load_config(args.config).samples
    if samples is None:
        raise ConfigError("calibrate needs --samples or a 'samples' entry in --config")
    try:
        delta = parse_angle(args.delta)
    except ValueError as exc:
        raise ConfigError(f"--delta: {exc}") from None
    if not math.isfinite(delta):
        raise ConfigError("--delta must be finite")
    _report([write_calibration(run_calibrate(samples, delta), args.out)])
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    points = run_sweep(cfg, threads=args.threads)
    written = write_sweep(points, args.out)
    if args.figures:
        from . import report

        series = [(f"{p.parameter} = {p.value}", p.result.variances) for p in points]
        written.append(report.plot_variance(series, args.out / "sweep_variance.png"))
    _report(written)
    return EXIT_OK


def _report(paths: Sequence[Path]) -> None:
    for p in paths:
        print(p)


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "spectrum": cmd_spectrum,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.seed is not None:
        log.debug("--seed %d ignored: evolution is deterministic", args.seed)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
