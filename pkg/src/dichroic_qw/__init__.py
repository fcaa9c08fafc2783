"""Non-Hermitian discrete-time quantum walks with dichroic g-plate displacements."""

from .analysis import (
    ProbabilityDistribution,
    distribution,
    similarity,
    spreading_exponent,
    variance,
)
from .calibration import (
    AVERAGE_PLATE_ETAS,
    CalibrationSample,
    PlateRow,
    PlateTable,
    build_protocol,
    extract_eta,
    extract_eta_prime,
)
from .errors import (
    AliasingError,
    ConfigError,
    ExtinctWalkerError,
    FitError,
    InvalidStateError,
    MeasurementError,
    WalkError,
)
from .spectral import BlochOperator, BlochSpectrum, bloch_symbol, evolve_bloch, quasi_energies
from .walk import (
    Coin,
    PlateKind,
    PlateParams,
    Protocol,
    WalkState,
    apply_coin,
    apply_displacement,
    evolve,
    make_localized_state,
    walk_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "ProbabilityDistribution",
    "distribution",
    "similarity",
    "spreading_exponent",
    "variance",
    "AVERAGE_PLATE_ETAS",
    "CalibrationSample",
    "PlateRow",
    "PlateTable",
    "build_protocol",
    "extract_eta",
    "extract_eta_prime",
    "AliasingError",
    "ConfigError",
    "ExtinctWalkerError",
    "FitError",
    "InvalidStateError",
    "MeasurementError",
    "WalkError",
    "BlochOperator",
    "BlochSpectrum",
    "bloch_symbol",
    "evolve_bloch",
    "quasi_energies",
    "Coin",
    "PlateKind",
    "PlateParams",
    "Protocol",
    "WalkState",
    "apply_coin",
    "apply_displacement",
    "evolve",
    "make_localized_state",
    "walk_protocol",
]
