"""Four-level quantum dot emission spectra under two-laser driving.

Energies are in meV (level and photon energies) or ueV (couplings, rates),
times in ps, voltages in V.
"""

from ._core import (
    HBAR_UEV_PS,
    ConfigError,
    RunConfig,
    __version__,
    oracle,
    populations,
    simulate,
    sweep,
    validate,
    write_sweep,
)

__all__ = [
    "HBAR_UEV_PS",
    "ConfigError",
    "RunConfig",
    "__version__",
    "oracle",
    "populations",
    "simulate",
    "sweep",
    "validate",
    "write_sweep",
]
