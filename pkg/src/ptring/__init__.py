"""Coupled active/passive whispering-gallery resonators with saturable gain.

Steady states, supermode spectra, exceptional points, port transmissivities,
semiclassical dynamics and a truncated-Fock-space quantum check.
"""

from .model import (
    ConfigError,
    DomainError,
    DriveConfig,
    GainParams,
    Port,
    ResonatorParams,
    SystemConfig,
    derive,
    drive_coupling,
    make_config,
    with_params,
)
from .spectral import eigenfrequencies, find_EP
from .steady import steady_state, solve_intensity
from .transmission import sweep_spectrum, transmissivity

__all__ = [
    "ConfigError",
    "DomainError",
    "DriveConfig",
    "GainParams",
    "Port",
    "ResonatorParams",
    "SystemConfig",
    "derive",
    "drive_coupling",
    "make_config",
    "with_params",
    "eigenfrequencies",
    "find_EP",
    "steady_state",
    "solve_intensity",
    "sweep_spectrum",
    "transmissivity",
]
