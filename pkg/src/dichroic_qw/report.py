"""Static figures written next to the CSV tables.

Rendering uses the non-interactive Agg backend, so it works headless.
Figures are a convenience view; the CSV files remain the canonical output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
BAR_COLOR = "#4c72b0"
# fixed metadata keeps PNG bytes independent of the matplotlib version string
PNG_METADATA = {"Software": None}


def _save(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def plot_distributions(result, path: str | Path, title: str | None = None) -> Path:
    """One bar panel per step ``t = 1..T`` of a :class:`SimulationResult`."""
    dists = result.distributions[1:] or result.distributions
    first = 1 if len(result.distributions) > 1 else 0
    reach = max(max(abs(d.m_min), abs(d.m_max)) for d in dists)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(dists), figsize=(2.0 * len(dists) + 0.5, 2.2),
                                 sharey=True, squeeze=False)
        for k, (ax, d) in enumerate(zip(axes[0], dists)):
            ax.bar(d.sites, d.probs, width=0.8, color=BAR_COLOR)
            ax.set_xlim(-reach - 0.7, reach + 0.7)
            ax.set_title(f"t = {first + k}")
            ax.set_xlabel("site m")
        axes[0, 0].set_ylabel("P(m)")
        axes[0, 0].set_ylim(0, 1.05 * max(float(d.probs.max()) for d in dists))
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_variance(series: Sequence[tuple[str, Sequence[float]]], path: str | Path) -> Path:
    """Variance against step for several labelled runs (step 0 first)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        for label, variances in series:
            t = np.arange(len(variances))
            ax.plot(t, variances, marker="o", ms=3, lw=1, label=label)
        ax.set_xlabel("step t")
        ax.set_ylabel("variance")
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_spectrum(result, path: str | Path) -> Path:
    """Real and imaginary quasi-energy bands plus eigenvector overlap."""
    s = result.spectrum
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(8.0, 2.5), sharex=True)
        for sign in (1, -1):
            axes[0].plot(s.q_grid, sign * s.energies.real, color=BAR_COLOR, lw=1)
            axes[1].plot(s.q_grid, sign * s.energies.imag, color="#c44e52", lw=1)
        axes[2].plot(s.q_grid, s.eigenvector_overlap, color="#55a868", lw=1)
        if np.any(s.exceptional):
            axes[2].plot(s.q_grid[s.exceptional], s.eigenvector_overlap[s.exceptional], "kx")
        for ax, label in zip(axes, ("Re E", "Im E", "|<v+|v->|")):
            ax.set_xlabel("q")
            ax.set_ylabel(label)
            ax.set_xlim(-np.pi, np.pi)
        fig.suptitle(f"delta = {result.delta:.4g}, eta = {result.eta:.4g}")
        fig.tight_layout()
        return _save(fig, path)


def plot_similarity(similarities: dict[int, float], path: str | Path, threshold: float | None = None) -> Path:
    steps = sorted(similarities)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.4, 2.4))
        ax.bar(steps, [similarities[t] for t in steps], color=BAR_COLOR, width=0.6)
        if threshold is not None:
            ax.axhline(threshold, color="k", ls="--", lw=0.8)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("step t")
        ax.set_ylabel("similarity S")
        fig.tight_layout()
        return _save(fig, path)
