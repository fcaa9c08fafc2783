r"""Coin-walker states and the plate operators acting on them.

The walker lives on a 1D lattice of sites ``m`` and carries a two-level coin
in the circular basis ``(L, R)``.  One walk step is a quarter-wave coin
rotation followed by a (possibly dichroic) g-plate displacement

.. math::

    T = e^{-\eta'/2} \begin{pmatrix}
        \cos\frac{\zeta}{2} & i \sin\frac{\zeta}{2}\, \hat t \\
        i \sin\frac{\zeta}{2}\, \hat t^\dagger & \cos\frac{\zeta}{2}
    \end{pmatrix}, \qquad \zeta = \delta + i\eta,

with :math:`\hat t |m\rangle = |m-1\rangle`.  On amplitudes this reads

.. math::

    a'_{m,L} = e^{-\eta'/2}(c\, a_{m,L} + i s\, a_{m+1,R}), \qquad
    a'_{m,R} = e^{-\eta'/2}(c\, a_{m,R} + i s\, a_{m-1,L}).

States are immutable; every operator returns a new :class:`WalkState`.
Amplitudes are never renormalized, so the squared norm tracks the surviving
light fraction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidStateError

__all__ = [
    "Coin",
    "PlateKind",
    "PlateParams",
    "Protocol",
    "WalkState",
    "COIN_MATRIX",
    "coin_plate",
    "displacement_plate",
    "walk_protocol",
    "make_localized_state",
    "named_coin_state",
    "apply_coin",
    "apply_displacement",
    "apply_plate",
    "evolve",
]

SQRT_HALF = 1.0 / math.sqrt(2.0)

#: Quarter-wave coin rotation in the (L, R) basis.
COIN_MATRIX: NDArray[np.complex128] = SQRT_HALF * np.array(
    [[1.0, 1.0j], [1.0j, 1.0]], dtype=np.complex128
)
COIN_MATRIX.setflags(write=False)


class Coin(enum.IntEnum):
    """Coin basis states; the integer value is the column in amplitude arrays."""

    L = 0
    R = 1


class PlateKind(enum.Enum):
    COIN = "coin"
    DISPLACEMENT = "displacement"


@dataclass(frozen=True)
class PlateParams:
    """One optical layer of the walk.

    Parameters
    ----------
    kind:
        Coin rotation (fixed quarter-wave matrix) or displacement (g-plate).
    delta:
        Birefringent retardation in radians.  Ignored for coin plates.
    eta:
        Dichroism ``eta_e - eta_o``; must be non-negative.
    eta_prime:
        Global attenuation exponent ``eta_e + eta_o``.
    passive:
        When true, ``eta_prime >= eta`` is enforced (ordinary wave not
        amplified).  Switch off to use the ``eta_prime = 0`` convention.
    """

    kind: PlateKind
    delta: float = 0.0
    eta: float = 0.0
    eta_prime: float = 0.0
    passive: bool = True

    def __post_init__(self) -> None:
        for name in ("delta", "eta", "eta_prime"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidStateError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.kind is PlateKind.COIN:
            if self.eta != 0.0 or self.eta_prime != 0.0:
                raise InvalidStateError("coin rotation plates carry no dichroism")
            return
        if self.eta < 0.0:
            raise InvalidStateError(f"eta must be >= 0 (lossy convention), got {self.eta}")
        if self.eta_prime < 0.0:
            raise InvalidStateError(f"eta_prime must be >= 0, got {self.eta_prime}")
        if self.passive and self.eta_prime < self.eta:
            raise InvalidStateError(
                f"passive plate needs eta_prime >= eta, got eta={self.eta}, "
                f"eta_prime={self.eta_prime}"
            )


def coin_plate() -> PlateParams:
    return PlateParams(PlateKind.COIN)


def displacement_plate(
    delta: float,
    eta: float = 0.0,
    eta_prime: float | None = None,
    *,
    passive: bool | None = None,
) -> PlateParams:
    """Build a g-plate; ``eta_prime`` defaults to ``eta`` (lossless ordinary wave).

    ``passive`` defaults to whether the given ``eta_prime`` satisfies the
    passivity bound, so an explicit ``eta_prime=0`` is accepted as the
    attenuation-free convention.
    """
    if eta_prime is None:
        eta_prime = eta
    if passive is None:
        passive = eta_prime >= eta
    return PlateParams(PlateKind.DISPLACEMENT, delta, eta, eta_prime, passive)


@dataclass(frozen=True)
class Protocol:
    """Ordered plates, grouped into ``steps`` equal per-step subsequences.

    ``plates`` are applied first to last, so a canonical step is
    ``(coin, displacement)``.
    """

    plates: tuple[PlateParams, ...]
    steps: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "plates", tuple(self.plates))
        if self.steps < 0:
            raise InvalidStateError(f"steps must be >= 0, got {self.steps}")
        if self.steps == 0:
            if self.plates:
                raise InvalidStateError("a zero-step protocol cannot hold plates")
            return
        if len(self.plates) % self.steps:
            raise InvalidStateError(
                f"{len(self.plates)} plates cannot be split into {self.steps} equal steps"
            )
        for plate in self.plates:
            if not isinstance(plate, PlateParams):
                raise InvalidStateError(f"not a plate: {plate!r}")

    @classmethod
    def repeat(cls, step: Sequence[PlateParams], steps: int) -> "Protocol":
        return cls(tuple(step) * steps, steps)

    @property
    def plates_per_step(self) -> int:
        return len(self.plates) // self.steps if self.steps else 0

    def step_plates(self, k: int) -> tuple[PlateParams, ...]:
        """Plates of step ``k`` (0-based)."""
        if not 0 <= k < self.steps:
            raise IndexError(k)
        n = self.plates_per_step
        return self.plates[k * n : (k + 1) * n]

    def displacements(self) -> list[PlateParams]:
        return [p for p in self.plates if p.kind is PlateKind.DISPLACEMENT]

    @property
    def n_displacements(self) -> int:
        return len(self.displacements())

    def is_uniform(self) -> bool:
        """True when every step repeats the plates of the first one."""
        return all(self.step_plates(k) == self.step_plates(0) for k in range(self.steps))


def _broadcast(name: str, value: float | Sequence[float], steps: int) -> list[float]:
    if np.ndim(value) == 0:
        return [float(value)] * steps  # type: ignore[arg-type]
    values = [float(v) for v in value]  # type: ignore[union-attr]
    if len(values) != steps:
        raise InvalidStateError(f"{name} has {len(values)} entries, expected {steps}")
    return values


def walk_protocol(
    steps: int,
    delta: float | Sequence[float],
    eta: float | Sequence[float] = 0.0,
    eta_prime: float | Sequence[float] | None = None,
) -> Protocol:
    """Coin-then-displacement walk of ``steps`` steps.

    Scalars broadcast over steps; sequences give per-step (per-plate) values,
    e.g. the individual dichroism of each g-plate in the stack.
    """
    if steps < 0:
        raise InvalidStateError(f"steps must be >= 0, got {steps}")
    deltas = _broadcast("delta", delta, steps)
    etas = _broadcast("eta", eta, steps)
    primes = etas if eta_prime is None else _broadcast("eta_prime", eta_prime, steps)
    plates: list[PlateParams] = []
    for d, e, ep in zip(deltas, etas, primes):
        plates += [coin_plate(), displacement_plate(d, e, ep)]
    return Protocol(tuple(plates), steps)


@dataclass(frozen=True, eq=False)
class WalkState:
    """Amplitudes ``a[m - m_min, coin]`` on a contiguous window of sites."""

    m_min: int
    amplitudes: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2 or amps.shape[1] != 2 or amps.shape[0] == 0:
            raise InvalidStateError(f"amplitudes must have shape (n>0, 2), got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "m_min", int(self.m_min))
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def m_max(self) -> int:
        return self.m_min + self.n_sites - 1

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.m_min, self.m_min + self.n_sites)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, m: int, coin: Coin | int) -> complex:
        i = m - self.m_min
        if 0 <= i < self.n_sites:
            return complex(self.amplitudes[i, int(coin)])
        return 0j

    def support(self, tol: float = 0.0) -> tuple[int, int] | None:
        """Smallest and largest site with ``|a|^2 > tol``, or None if empty."""
        occupied = np.nonzero(np.sum(np.abs(self.amplitudes) ** 2, axis=1) > tol)[0]
        if occupied.size == 0:
            return None
        return self.m_min + int(occupied[0]), self.m_min + int(occupied[-1])

    def padded(self, lo: int, hi: int) -> "WalkState":
        """Same state on the window ``[lo, hi]``, which must contain the current one."""
        if lo > self.m_min or hi < self.m_max:
            raise InvalidStateError(
                f"window [{lo}, {hi}] does not contain [{self.m_min}, {self.m_max}]"
            )
        out = np.zeros((hi - lo + 1, 2), dtype=np.complex128)
        out[self.m_min - lo : self.m_max - lo + 1] = self.amplitudes
        return WalkState(lo, out)

    def scaled(self, factor: complex) -> "WalkState":
        return WalkState(self.m_min, factor * self.amplitudes)

    def allclose(self, other: "WalkState", atol: float = 1e-12) -> bool:
        lo, hi = min(self.m_min, other.m_min), max(self.m_max, other.m_max)
        a, b = self.padded(lo, hi), other.padded(lo, hi)
        return bool(np.max(np.abs(a.amplitudes - b.amplitudes)) <= atol)


def named_coin_state(name: str) -> NDArray[np.complex128]:
    """Coin vector for ``"L"``, ``"R"`` or ``"H"`` (horizontal, ``(L + R)/sqrt(2)``)."""
    table = {
        "L": (1.0, 0.0),
        "R": (0.0, 1.0),
        "H": (SQRT_HALF, SQRT_HALF),
    }
    try:
        return np.array(table[name.upper()], dtype=np.complex128)
    except KeyError:
        raise InvalidStateError(f"unknown coin state {name!r}; use one of {sorted(table)}") from None


def make_localized_state(coin_amplitudes: ArrayLike | str) -> WalkState:
    """Unit-norm walker on site 0 with the given (L, R) coin amplitudes."""
    if isinstance(coin_amplitudes, str):
        coin = named_coin_state(coin_amplitudes)
    else:
        coin = np.asarray(coin_amplitudes, dtype=np.complex128).reshape(-1)
    if coin.shape != (2,):
        raise InvalidStateError(f"coin needs exactly 2 amplitudes, got {coin.shape}")
    norm = np.linalg.norm(coin)
    if not np.isfinite(norm) or norm == 0.0:
        raise InvalidStateError("coin amplitudes must have nonzero finite norm")
    return WalkState(0, (coin / norm)[None, :])


def apply_coin(state: WalkState) -> WalkState:
    """Quarter-wave rotation ``(a_L, a_R) -> (a_L + i a_R, i a_L + a_R)/sqrt(2)`` on every site."""
    return WalkState(state.m_min, state.amplitudes @ COIN_MATRIX.T)


def apply_displacement(
    state: WalkState,
    delta: float,
    eta: float = 0.0,
    eta_prime: float | None = None,
) -> WalkState:
    """Dichroic g-plate; the window grows by one site on each side."""
    if eta < 0.0:
        raise InvalidStateError(f"eta must be >= 0 (gain is not modelled), got {eta}")
    if eta_prime is None:
        eta_prime = eta
    zeta = complex(delta, eta)
    gain = math.exp(-eta_prime / 2.0)
    c = gain * np.cos(zeta / 2.0)
    s = gain * 1j * np.sin(zeta / 2.0)

    a = state.padded(state.m_min - 1, state.m_max + 1).amplitudes
    out = c * a
    out[:-1, Coin.L] += s * a[1:, Coin.R]
    out[1:, Coin.R] += s * a[:-1, Coin.L]
    return WalkState(state.m_min - 1, out)


def apply_plate(state: WalkState, plate: PlateParams) -> WalkState:
    if plate.kind is PlateKind.COIN:
        return apply_coin(state)
    return apply_displacement(state, plate.delta, plate.eta, plate.eta_prime)


def evolve(state: WalkState, protocol: Protocol | Iterable[PlateParams]) -> list[WalkState]:
    """Snapshots after each step, starting with ``state`` itself at t = 0."""
    if not isinstance(protocol, Protocol):
        plates = tuple(protocol)
        protocol = Protocol(plates, 1 if plates else 0)
    snapshots = [state]
    for k in range(protocol.steps):
        for plate in protocol.step_plates(k):
            state = apply_plate(state, plate)
        snapshots.append(state)
    return snapshots
