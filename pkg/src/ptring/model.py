"""Domain types and derived-parameter algebra for the active/passive resonator pair.

Every rate is stored in s^-1. A value quoted as "1 MHz" is taken to mean
1e6 s^-1; the formulas are homogeneous in rate units so the choice of
angular vs. cyclic convention never enters except through the photon energy
used by :func:`epsilon_from_power`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR

__all__ = [
    "HBAR",
    "SPEED_OF_LIGHT",
    "DEFAULT_WAVELENGTH",
    "ConfigError",
    "DomainError",
    "Port",
    "ResonatorParams",
    "GainParams",
    "DriveConfig",
    "SystemConfig",
    "DerivedParams",
    "derive",
    "gain_coefficients",
    "epsilon_from_power",
    "saturation_from_maxwell_bloch",
    "omega_from_wavelength",
    "drive_coupling",
    "make_config",
    "with_params",
    "SWEEPABLE",
]

DEFAULT_WAVELENGTH = 1550e-9
_REL = 1e-12


class ConfigError(ValueError):
    """Invalid physical configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DomainError(ValueError):
    pass


class Port(Enum):
    """Input port of the probe field.

    PORT1 drives the active cavity (light travels 1 -> 4), PORT4 drives the
    passive cavity (light travels 4 -> 1).
    """

    PORT1 = 1
    PORT4 = 4

    @property
    def label(self) -> str:
        return "1->4" if self is Port.PORT1 else "4->1"

    @classmethod
    def parse(cls, value) -> "Port":
        if isinstance(value, Port):
            return value
        text = str(value).strip().lower()
        if text in ("1", "port1", "1->4", "forward"):
            return cls.PORT1
        if text in ("4", "port4", "4->1", "backward"):
            return cls.PORT4
        raise ValueError(f"unknown port {value!r}")


def _nonneg(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ConfigError(name, f"must be a finite non-negative rate, got {value!r}")


def _close(a: float, b: float, rel: float = _REL) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def omega_from_wavelength(wavelength: float) -> float:
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    return 2.0 * math.pi * SPEED_OF_LIGHT / wavelength


@dataclass(frozen=True)
class ResonatorParams:
    omega_c: float
    C1: float
    C2: float
    gamma1: float
    gamma2: float
    Q1: float | None = None
    Q2: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.omega_c) or self.omega_c < 0:
            raise ConfigError("resonators.omega_c", f"must be finite and >= 0, got {self.omega_c!r}")
        for name in ("C1", "C2", "gamma1", "gamma2"):
            _nonneg(f"resonators.{name}", getattr(self, name))
        for q, loss in (("Q1", self.C1), ("Q2", self.C2)):
            qv = getattr(self, q)
            if qv is None:
                continue
            if not qv > 0:
                raise ConfigError(f"resonators.{q}", "quality factor must be positive")
            if not _close(loss, self.omega_c / qv):
                raise ConfigError(
                    f"resonators.{q}",
                    f"intrinsic loss {loss!r} inconsistent with omega_c/{q} = {self.omega_c / qv!r}",
                )

    @classmethod
    def from_quality(cls, omega_c: float, Q1: float, Q2: float, gamma1: float, gamma2: float):
        return cls(omega_c, omega_c / Q1, omega_c / Q2, gamma1, gamma2, Q1, Q2)

    @property
    def Gamma1(self) -> float:
        return self.C1 + self.gamma1

    @property
    def Gamma2(self) -> float:
        return self.C2 + self.gamma2


@dataclass(frozen=True)
class GainParams:
    A: float
    B: float
    g: float | None = None
    r: float | None = None
    Gamma_atom: float | None = None

    def __post_init__(self):
        _nonneg("gain.A", self.A)
        _nonneg("gain.B", self.B)
        micro = (self.g, self.r, self.Gamma_atom)
        if any(v is not None for v in micro):
            if any(v is None for v in micro):
                raise ConfigError("gain", "microscopic triple (g, r, Gamma_atom) must be given together")
            A, B = gain_coefficients(*micro)
            if not (_close(A, self.A) and _close(B, self.B)):
                raise ConfigError("gain", f"A, B = ({self.A!r}, {self.B!r}) disagree with microscopic values ({A!r}, {B!r})")

    @classmethod
    def from_microscopic(cls, g: float, r: float, Gamma_atom: float) -> "GainParams":
        A, B = gain_coefficients(g, r, Gamma_atom)
        return cls(A, B, g, r, Gamma_atom)

    @classmethod
    def from_maxwell_bloch(cls, A: float, A_sat_sq: float) -> "GainParams":
        return cls(A, saturation_from_maxwell_bloch(A, A_sat_sq))


@dataclass(frozen=True)
class DriveConfig:
    """Probe drive. ``detuning`` is omega_l - omega_c in s^-1.

    When ``power`` is set, ``epsilon`` must match sqrt(gamma_in P / (hbar omega_l))
    for the waveguide of ``port``; :func:`drive_coupling` recomputes it for the
    opposite port so both propagation directions see the same input power.
    """

    port: Port = Port.PORT1
    epsilon: float = 0.0
    detuning: float = 0.0
    power: float | None = None
    wavelength: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "port", Port.parse(self.port))
        _nonneg("drive.epsilon", self.epsilon)
        if not math.isfinite(self.detuning):
            raise ConfigError("drive.detuning", "must be finite")
        if self.power is not None:
            _nonneg("drive.power", self.power)
        if self.wavelength is not None and not self.wavelength > 0:
            raise ConfigError("drive.wavelength", "must be positive")


@dataclass(frozen=True)
class SystemConfig:
    resonators: ResonatorParams
    gain: GainParams
    kappa: float
    drive: DriveConfig = field(default_factory=DriveConfig)

    def __post_init__(self):
        _nonneg("kappa", self.kappa)
        if self.drive.power is not None:
            expected = drive_coupling(self, self.drive.port)
            if not _close(expected, self.drive.epsilon, 1e-9):
                raise ConfigError(
                    "drive.epsilon",
                    f"{self.drive.epsilon!r} inconsistent with power {self.drive.power!r} W (expected {expected!r})",
                )

    @property
    def omega_l(self) -> float:
        return self.resonators.omega_c + self.drive.detuning


@dataclass(frozen=True)
class DerivedParams:
    Gamma1: float
    Gamma2: float
    G1: float
    Delta: float
    f: float
    F: float


def derive(config: SystemConfig, omega: float | None = None) -> DerivedParams:
    """Derived rates at probe frequency ``omega`` (defaults to the drive detuning).

    ``omega`` is an absolute angular frequency; passing ``None`` uses the
    stored detuning directly, which avoids cancellation against omega_c.
    """
    res, gain = config.resonators, config.gain
    Delta = config.drive.detuning if omega is None else omega - res.omega_c
    Gamma1 = res.C1 + res.gamma1
    Gamma2 = res.C2 + res.gamma2
    G1 = gain.A - Gamma1 - 1.75 * gain.B
    denom = Gamma2 * Gamma2 + 4.0 * Delta * Delta
    if denom > 0:
        f = 4.0 * config.kappa**2 / denom
    else:
        # lossless passive cavity probed exactly on resonance
        f = 0.0 if config.kappa == 0 else math.inf
    F = 0.5 * (f * Gamma2 - G1)
    return DerivedParams(Gamma1, Gamma2, G1, Delta, f, F)


def gain_coefficients(g: float, r: float, Gamma_atom: float) -> tuple[float, float]:
    """Linear gain ``A = 2 g^2 r / Gamma^2`` and saturation ``B = 4 g^2 A / Gamma^2``."""
    if not Gamma_atom > 0:
        raise DomainError(f"atomic decay rate must be positive, got {Gamma_atom!r}")
    if g < 0 or r < 0:
        raise DomainError("g and r must be non-negative")
    ratio = g * g / (Gamma_atom * Gamma_atom)
    A = 2.0 * ratio * r
    return A, 4.0 * ratio * A


def epsilon_from_power(P: float, wavelength: float, gamma_in: float) -> float:
    """Drive coupling sqrt(gamma_in * P / (hbar * omega_l)) with omega_l = 2 pi c / wavelength."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    if P < 0 or gamma_in < 0:
        raise DomainError("power and coupling rate must be non-negative")
    return math.sqrt(gamma_in * P * wavelength / (HBAR * 2.0 * math.pi * SPEED_OF_LIGHT))


def saturation_from_maxwell_bloch(A: float, A_sat_sq: float) -> float:
    """B = A / |A_s|^2, the first-order match to a saturable gain A / (1 + I/|A_s|^2)."""
    if not A_sat_sq > 0:
        raise DomainError(f"saturation intensity must be positive, got {A_sat_sq!r}")
    return A / A_sat_sq


def _power_coupling(res: ResonatorParams, drive: DriveConfig, port: Port) -> float:
    gamma_in = res.gamma1 if port is Port.PORT1 else res.gamma2
    if drive.wavelength is not None:
        wavelength = drive.wavelength
    else:
        omega_l = res.omega_c + drive.detuning
        if not omega_l > 0:
            raise DomainError("drive power given but neither wavelength nor a positive omega_c")
        wavelength = 2.0 * math.pi * SPEED_OF_LIGHT / omega_l
    return epsilon_from_power(drive.power, wavelength, gamma_in)


def drive_coupling(config: SystemConfig, port: Port | None = None) -> float:
    """Drive coupling epsilon seen when probing from ``port``."""
    drive = config.drive
    port = drive.port if port is None else Port.parse(port)
    if drive.power is None:
        return drive.epsilon
    return _power_coupling(config.resonators, drive, port)


def make_config(
    *,
    A: float = 0.0,
    B: float = 0.0,
    C1: float = 0.0,
    C2: float = 0.0,
    gamma1: float = 0.0,
    gamma2: float | None = None,
    kappa: float = 0.0,
    epsilon: float = 0.0,
    detuning: float = 0.0,
    port: Port | int | str = Port.PORT1,
    omega_c: float | None = None,
    power: float | None = None,
    wavelength: float | None = None,
) -> SystemConfig:
    """Flat constructor; ``gamma2`` defaults to ``gamma1``.

    With ``power`` given, ``epsilon`` is ignored and derived for ``port``.
    """
    if gamma2 is None:
        gamma2 = gamma1
    if omega_c is None:
        omega_c = omega_from_wavelength(wavelength or DEFAULT_WAVELENGTH)
    res = ResonatorParams(omega_c, C1, C2, gamma1, gamma2)
    # without a power the wavelength only fixes omega_c
    drive = DriveConfig(port, epsilon, detuning, power, wavelength if power is not None else None)
    if power is not None:
        drive = replace(drive, epsilon=_power_coupling(res, drive, drive.port))
    return SystemConfig(res, GainParams(A, B), kappa, drive)


# flat parameter name -> (section, attribute); section None means top level
SWEEPABLE = {
    "A": ("gain", "A"),
    "B": ("gain", "B"),
    "C1": ("resonators", "C1"),
    "C2": ("resonators", "C2"),
    "gamma1": ("resonators", "gamma1"),
    "gamma2": ("resonators", "gamma2"),
    "omega_c": ("resonators", "omega_c"),
    "kappa": (None, "kappa"),
    "epsilon": ("drive", "epsilon"),
    "detuning": ("drive", "detuning"),
    "power": ("drive", "power"),
}


def with_params(config: SystemConfig, **values: float) -> SystemConfig:
    """Return a copy of ``config`` with flat-named parameters replaced.

    Setting ``gamma`` assigns both waveguide couplings. If the drive is
    power-specified, epsilon is re-derived after the update; setting
    ``epsilon`` explicitly drops the power specification.
    """
    if "gamma" in values:
        g = values.pop("gamma")
        values.setdefault("gamma1", g)
        values.setdefault("gamma2", g)
    sections: dict[str | None, dict[str, float]] = {}
    for name, value in values.items():
        if name not in SWEEPABLE:
            raise KeyError(f"unknown parameter {name!r}; expected one of {sorted(SWEEPABLE)}")
        section, attr = SWEEPABLE[name]
        sections.setdefault(section, {})[attr] = value

    res = config.resonators
    if "resonators" in sections:
        res = replace(res, Q1=None, Q2=None, **sections["resonators"])
    gain = config.gain
    if "gain" in sections:
        gain = GainParams(sections["gain"].get("A", gain.A), sections["gain"].get("B", gain.B))
    drive = config.drive
    dvals = sections.get("drive", {})
    if "epsilon" in dvals:
        drive = replace(drive, power=None, wavelength=None, **dvals)
    elif dvals:
        drive = replace(drive, **dvals)
    kappa = sections.get(None, {}).get("kappa", config.kappa)
    if drive.power is not None:
        drive = replace(drive, epsilon=_power_coupling(res, drive, drive.port))
    return SystemConfig(res, gain, kappa, drive)
