"""CSV rendering and parsing for simulation outputs and reference data."""

from __future__ import annotations

import csv
import io
import logging
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .analysis import ProbabilityDistribution
from .errors import ConfigError

log = logging.getLogger(__name__)

__all__ = [
    "fmt",
    "render_csv",
    "write_csv",
    "read_distributions",
    "distribution_rows",
    "NORMALIZATION_SLACK",
]

#: References whose total differs from 1 by less than this are renormalized.
NORMALIZATION_SLACK = 1e-6


def fmt(value: object) -> str:
    """Fixed textual form: shortest round-trip repr for floats, no negative zero."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == 0.0:
            return "0"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = Path(path)
    path.write_text(render_csv(header, rows), encoding="utf-8", newline="")
    return path


def read_distributions(path: str | Path) -> dict[int, ProbabilityDistribution]:
    """Read ``step,site,probability`` rows into one distribution per step.

    Totals within :data:`NORMALIZATION_SLACK` of 1 are renormalized, with a
    warning unless the drift is round-off; larger deviations, negative
    entries and duplicate rows are errors.
    """
    path = Path(path)
    per_step: dict[int, dict[int, float]] = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open reference: {exc.strerror}", source=str(path)) from None
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("step", "site", "probability") if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"missing columns {missing}", source=str(path), line=1)
        for row in reader:
            line = reader.line_num
            try:
                step, site = int(row["step"]), int(row["site"])
                p = float(row["probability"])
            except (TypeError, ValueError):
                raise ConfigError(f"malformed row {row!r}", source=str(path), line=line) from None
            if not math.isfinite(p) or p < 0:
                raise ConfigError(f"invalid probability {p!r}", source=str(path), line=line)
            bucket = per_step.setdefault(step, {})
            if site in bucket:
                raise ConfigError(f"duplicate entry for step {step}, site {site}", source=str(path), line=line)
            bucket[site] = p
    if not per_step:
        raise ConfigError("reference file has no rows", source=str(path))

    out: dict[int, ProbabilityDistribution] = {}
    for step in sorted(per_step):
        total = math.fsum(per_step[step].values())
        if abs(total - 1.0) >= NORMALIZATION_SLACK:
            raise ConfigError(f"step {step} sums to {total:.9g}, not 1", source=str(path))
        if abs(total - 1.0) > 1e-12:
            log.warning("reference step %d sums to %.12g; renormalizing", step, total)
        out[step] = ProbabilityDistribution.from_mapping(
            {m: p / total for m, p in per_step[step].items()}
        )
    return out


def distribution_rows(
    dists: Mapping[int, ProbabilityDistribution],
) -> list[tuple[int, int, float]]:
    return [
        (step, int(m), float(p))
        for step, d in sorted(dists.items())
        for m, p in zip(d.sites, d.probs)
    ]
