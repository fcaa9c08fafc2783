"""Observables extracted from walker states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ExtinctWalkerError, FitError
from .walk import WalkState

__all__ = [
    "ProbabilityDistribution",
    "EXTINCTION_THRESHOLD",
    "distribution",
    "similarity",
    "variance",
    "spreading_exponent",
]

#: Survival weights below this count as total absorption.
EXTINCTION_THRESHOLD = 1e-300


@dataclass(frozen=True, eq=False)
class ProbabilityDistribution:
    """Normalized site occupation ``probs[m - m_min]`` plus the survival weight."""

    m_min: int
    probs: NDArray[np.float64]
    survival: float = 1.0

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float).reshape(-1)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "m_min", int(self.m_min))

    @classmethod
    def from_mapping(cls, probs: dict[int, float], survival: float = 1.0) -> "ProbabilityDistribution":
        """Build from ``{site: probability}``; gaps between sites are zero."""
        if not probs:
            raise ValueError("empty distribution")
        lo, hi = min(probs), max(probs)
        arr = np.zeros(hi - lo + 1)
        for m, p in probs.items():
            arr[m - lo] = p
        return cls(lo, arr, survival)

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.m_min, self.m_min + len(self.probs))

    @property
    def m_max(self) -> int:
        return self.m_min + len(self.probs) - 1

    def __getitem__(self, m: int) -> float:
        i = m - self.m_min
        return float(self.probs[i]) if 0 <= i < len(self.probs) else 0.0

    def as_dict(self) -> dict[int, float]:
        return {int(m): float(p) for m, p in zip(self.sites, self.probs)}

    def on_window(self, lo: int, hi: int) -> NDArray[np.float64]:
        """Probabilities on sites ``lo..hi``, zero outside the stored window."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.m_min), min(hi, self.m_max)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.m_min : b - self.m_min + 1]
        return out

    def mean(self) -> float:
        return float(np.dot(self.sites, self.probs))


def distribution(state: WalkState) -> ProbabilityDistribution:
    """``P_m = sum_coin |a_m|^2 / total``; ``survival`` keeps the total."""
    weights = np.sum(np.abs(state.amplitudes) ** 2, axis=1)
    total = float(np.sum(weights))
    if not total > EXTINCTION_THRESHOLD:
        raise ExtinctWalkerError(f"walker fully absorbed (survival {total:g})")
    return ProbabilityDistribution(state.m_min, weights / total, total)


_BLOCK = 512


def similarity(p: ProbabilityDistribution, q: ProbabilityDistribution) -> float:
    """Squared Bhattacharyya overlap ``(sum_m sqrt(P_m Q_m))^2``.

    Sites are matched by absolute lattice index; a site missing from one
    window counts as zero probability there.  The square is expanded as
    ``sum_ij sqrt(r_i r_j)`` with ``r = P Q``, which is exact when the
    supports share a single site instead of squaring a rounded root.
    """
    lo, hi = max(p.m_min, q.m_min), min(p.m_max, q.m_max)
    if lo > hi:
        return 0.0
    r = p.on_window(lo, hi) * q.on_window(lo, hi)
    r = r[r > 0.0]
    total = 0.0
    for start in range(0, len(r), _BLOCK):
        total += float(np.sum(np.sqrt(np.outer(r[start:start + _BLOCK], r))))
    return min(total, 1.0)


def variance(p: ProbabilityDistribution) -> float:
    # central form; avoids cancellation between <m^2> and <m>^2 far from the origin
    m = p.sites.astype(float)
    mean = float(np.dot(m, p.probs))
    return float(np.dot((m - mean) ** 2, p.probs))


def spreading_exponent(variances: Iterable[tuple[int, float]] | Sequence[Sequence[float]]) -> float:
    """Slope of ``log v`` against ``log t`` by unweighted least squares.

    ``v ~ t**alpha``: 2 is ballistic, 1 diffusive.  Needs at least three
    points with ``t >= 1`` and ``v > 0``.
    """
    pts = np.asarray(list(variances), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise FitError("need at least three (t, variance) points")
    t, v = pts[:, 0], pts[:, 1]
    if np.any(t < 1):
        raise FitError("step numbers must be >= 1")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise FitError("variances must be positive and finite")
    if len(np.unique(t)) < 2:
        raise FitError("need at least two distinct step numbers")
    slope, _ = np.polyfit(np.log(t), np.log(v), 1)
    return float(slope)
