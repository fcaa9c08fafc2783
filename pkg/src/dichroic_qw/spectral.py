r"""Quasi-momentum picture of the translation-invariant walk.

With :math:`|q\rangle = \sum_m e^{-iqm}|m\rangle/\sqrt{2\pi}` the shift
:math:`\hat t` becomes :math:`e^{-iq}`, so one step acts on each momentum
component with the 2x2 symbol :math:`\mathcal U(q) = \tilde T(q)\,W`.
Amplitudes transform as :math:`\hat a(q) = \sum_m a_m e^{iqm}`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AliasingError
from .walk import COIN_MATRIX, PlateKind, PlateParams, Protocol, WalkState

__all__ = [
    "BlochOperator",
    "BlochSpectrum",
    "EXCEPTIONAL_GAP",
    "q_grid",
    "displacement_symbol",
    "bloch_matrices",
    "bloch_symbol",
    "quasi_energies",
    "evolve_bloch",
]

#: Eigenvalue gaps below this are classified as exceptional points.
EXCEPTIONAL_GAP = 1e-9
#: Relative size of the eigenvalue discriminant treated as zero (round-off level).
DISCRIMINANT_RTOL = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class BlochOperator:
    q: float
    matrix: NDArray[np.complex128]


@dataclass(frozen=True, eq=False)
class BlochSpectrum:
    """Per-q spectral data of the step symbol.

    ``energies`` holds the ``+E`` branch; ``-E`` is its partner.  ``Im E >= 0``
    and ``exp(-iE)`` is the larger-modulus eigenvalue of the bare symbol
    (attenuation ``eta_prime`` stripped).  ``eigenvalues`` belong to the full
    symbol and are ordered as ``(lambda_+, lambda_-)`` by decreasing modulus.
    """

    q_grid: NDArray[np.float64]
    energies: NDArray[np.complex128]
    eigenvalues: NDArray[np.complex128]
    gap: NDArray[np.float64]
    eigenvector_overlap: NDArray[np.float64]
    exceptional: NDArray[np.bool_]

    @property
    def cos_energy(self) -> NDArray[np.complex128]:
        return np.cos(self.energies)

    def __len__(self) -> int:
        return len(self.q_grid)


def q_grid(n: int) -> NDArray[np.float64]:
    """``n`` equally spaced momenta on the half-open interval ``[-pi, pi)``."""
    if n < 1:
        raise ValueError(f"grid needs at least one point, got {n}")
    return -math.pi + 2.0 * math.pi * np.arange(n) / n


def displacement_symbol(
    delta: float, eta: float, eta_prime: float | None, q: ArrayLike
) -> NDArray[np.complex128]:
    """Stack of g-plate symbols ``T(q)``, shape ``q.shape + (2, 2)``."""
    if eta_prime is None:
        eta_prime = eta
    q = np.asarray(q, dtype=float)
    zeta = complex(delta, eta)
    g = math.exp(-eta_prime / 2.0)
    c = g * np.cos(zeta / 2.0)
    s = g * 1j * np.sin(zeta / 2.0)
    out = np.empty(q.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = s * np.exp(-1j * q)
    out[..., 1, 0] = s * np.exp(1j * q)
    return out


def bloch_matrices(
    delta: float, eta: float, eta_prime: float | None, q: ArrayLike
) -> NDArray[np.complex128]:
    """Stack of one-step symbols ``U(q) = T(q) W``."""
    return displacement_symbol(delta, eta, eta_prime, q) @ COIN_MATRIX


def bloch_symbol(delta: float, eta: float, eta_prime: float | None, q: float) -> BlochOperator:
    return BlochOperator(float(q), bloch_matrices(delta, eta, eta_prime, float(q)))


def quasi_energies(
    delta: float,
    eta: float,
    eta_prime: float | None,
    grid: ArrayLike,
) -> BlochSpectrum:
    """Complex quasi-energies, eigenvalue gap and eigenvector non-orthogonality.

    ``E`` is the principal ``arccos`` of half the bare trace, negated when
    needed so that ``Im E >= 0``.  A point is flagged exceptional when the
    eigenvalue gap drops below :data:`EXCEPTIONAL_GAP` or the discriminant
    ``((a - d)/2)**2 + b c`` vanishes to round-off; the gap splits like the
    square root of round-off near a Jordan block, so the first test alone
    misses exact coalescence.  Flagged points report gap 0 and overlap 1.
    """
    q = np.atleast_1d(np.asarray(grid, dtype=float))
    if q.ndim != 1 or q.size == 0:
        raise ValueError("q grid must be a nonempty 1D array")
    if eta_prime is None:
        eta_prime = eta

    bare = bloch_matrices(delta, eta, 0.0, q)
    half_trace = 0.5 * (bare[:, 0, 0] + bare[:, 1, 1])
    energy = np.arccos(half_trace.astype(np.complex128))
    energy = np.where(energy.imag < 0.0, -energy, energy)

    full = bare * math.exp(-eta_prime / 2.0)
    vals, vecs = np.linalg.eig(full)
    order = np.argsort(-np.abs(vals), axis=1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)

    gap = np.abs(vals[:, 0] - vals[:, 1])
    overlap = np.abs(np.einsum("qi,qi->q", vecs[:, :, 0].conj(), vecs[:, :, 1]))
    half_diff = 0.5 * (bare[:, 0, 0] - bare[:, 1, 1])
    cross = bare[:, 0, 1] * bare[:, 1, 0]
    disc = half_diff**2 + cross
    scale = np.abs(half_diff) ** 2 + np.abs(cross)
    exceptional = (gap < EXCEPTIONAL_GAP) | (np.abs(disc) <= DISCRIMINANT_RTOL * np.maximum(scale, 1.0))
    gap = np.where(exceptional, 0.0, gap)
    overlap = np.where(exceptional, 1.0, np.clip(overlap, 0.0, 1.0))
    return BlochSpectrum(q, energy, vals, gap, overlap, exceptional)


def _plate_symbols(plate: PlateParams, q: NDArray[np.float64]) -> NDArray[np.complex128]:
    if plate.kind is PlateKind.COIN:
        return np.broadcast_to(COIN_MATRIX, q.shape + (2, 2))
    return displacement_symbol(plate.delta, plate.eta, plate.eta_prime, q)


def evolve_bloch(state: WalkState, protocol: Protocol, q_samples: int) -> WalkState:
    """Evolve ``state`` through ``protocol`` in momentum space.

    The result lives on the same window real-space evolution would produce:
    the input window widened by one site per displacement on each side.
    ``q_samples`` must be at least that window's length, otherwise the
    periodic momentum grid would fold distinct sites onto each other.
    """
    reach = protocol.n_displacements
    lo, hi = state.m_min - reach, state.m_max + reach
    width = hi - lo + 1
    if q_samples < width:
        raise AliasingError(
            f"{q_samples} momentum samples cannot resolve a {width}-site window; "
            f"need q_samples >= {width}"
        )
    n = int(q_samples)
    q = 2.0 * math.pi * np.fft.fftfreq(n)

    idx = state.sites % n
    x = np.zeros((n, 2), dtype=np.complex128)
    x[idx] = state.amplitudes
    # \hat a(q_k) = sum_m a_m exp(+i q_k m)
    spectrum = n * np.fft.ifft(x, axis=0)
    for plate in protocol.plates:
        spectrum = np.einsum("qij,qj->qi", _plate_symbols(plate, q), spectrum)
    x = np.fft.fft(spectrum, axis=0) / n

    out = x[np.arange(lo, hi + 1) % n]
    return WalkState(lo, out)
