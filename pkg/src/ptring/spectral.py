"""Evolution matrix, supermode eigenfrequencies and exceptional points.

With the steady-state intensity folded into the saturated gain
``G1' = G1 - B I1`` the undriven equations read ``i dα/dt = M α`` with::

    M = [[-Delta + i G1'/2,  -i kappa         ],
         [ i kappa,          -Delta - i Gamma2/2]]

and the eigenfrequencies are::

    omega_± = omega_c + i (G1' - Gamma2)/4 ± (1/2) sqrt(4 kappa^2 - (G1' + Gamma2)^2 / 4)
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .model import Port, SystemConfig, derive, with_params
from .steady import SteadyStateError, steady_state

__all__ = [
    "PTPhase",
    "PTBalance",
    "EigenSpectrum",
    "EPResult",
    "PARITY",
    "evolution_matrix",
    "eigenfrequencies",
    "eigen_shifts",
    "ep_discriminant",
    "find_EP",
    "classify_pt",
    "supermodes",
]

PARITY = np.array([[0.0, 1.0], [1.0, 0.0]])


class PTPhase(Enum):
    UNBROKEN = "unbroken"
    BROKEN = "broken"
    EP = "EP"


@dataclass(frozen=True)
class EigenSpectrum:
    """Supermode eigenfrequencies stored as shifts from ``omega_c``.

    Absolute frequencies (``omega_plus``/``omega_minus``) sit near 1e15 s^-1
    at telecom wavelengths, so the shifts are what carries the precision.
    """

    omega_c: float
    shift_plus: complex
    shift_minus: complex
    sqrt_arg: float
    at_EP: bool
    ep_tolerance: float
    pt_phase: PTPhase

    @property
    def omega_plus(self) -> complex:
        return self.omega_c + self.shift_plus

    @property
    def omega_minus(self) -> complex:
        return self.omega_c + self.shift_minus

    @property
    def splitting(self) -> complex:
        return self.shift_plus - self.shift_minus


@dataclass(frozen=True)
class PTBalance:
    """Which gain/loss balance holds: with saturation (full) and/or at I1 = 0 (linear)."""

    full: bool
    linear: bool
    full_mismatch: float
    linear_mismatch: float

    @property
    def label(self) -> str:
        if self.full:
            return "balanced_full"
        if self.linear:
            return "balanced_linear"
        return "unbalanced"


@dataclass(frozen=True)
class EPResult:
    kappas: tuple[float, ...]
    mode: str
    direction: Port
    bracket: tuple[float, float]
    note: str = ""

    @property
    def found(self) -> bool:
        return bool(self.kappas)

    @property
    def kappa(self) -> float:
        """Largest crossing: above it the spectrum stays unbroken. NaN if none."""
        return max(self.kappas) if self.kappas else math.nan


def evolution_matrix(config: SystemConfig, I1: float, omega: float | None = None) -> np.ndarray:
    if I1 < 0:
        raise ValueError("intensity must be non-negative")
    p = derive(config, omega)
    G1p = p.G1 - config.gain.B * I1
    k = config.kappa
    return np.array(
        [[complex(-p.Delta, 0.5 * G1p), -1j * k], [1j * k, complex(-p.Delta, -0.5 * p.Gamma2)]],
        dtype=complex,
    )


def ep_discriminant(config: SystemConfig, I1: float) -> float:
    """Square-root argument 4 kappa^2 - (G1' + Gamma2)^2 / 4; zero at the EP."""
    p = derive(config)
    s = p.G1 - config.gain.B * I1 + p.Gamma2
    return 4.0 * config.kappa**2 - 0.25 * s * s


def eigen_shifts(config: SystemConfig, I1: float) -> tuple[complex, complex, float]:
    p = derive(config)
    G1p = p.G1 - config.gain.B * I1
    arg = ep_discriminant(config, I1)
    centre = 0.25j * (G1p - p.Gamma2)
    root = 0.5 * cmath.sqrt(arg)
    return centre + root, centre - root, arg


def _order(a: complex, b: complex) -> tuple[complex, complex]:
    if (a.real, a.imag) >= (b.real, b.imag):
        return a, b
    return b, a


def eigenfrequencies(config: SystemConfig, I1: float, omega_c: float | None = None, ep_rtol: float = 1e-9) -> EigenSpectrum:
    """Closed-form supermode frequencies at intensity ``I1``.

    The EP flag uses ``|sqrt_arg| <= ep_rtol * max(4 kappa^2, (G1' + Gamma2)^2 / 4)``.
    """
    omega_c = config.resonators.omega_c if omega_c is None else omega_c
    plus, minus, arg = eigen_shifts(config, I1)
    plus, minus = _order(plus, minus)
    p = derive(config)
    s = p.G1 - config.gain.B * I1 + p.Gamma2
    tol = ep_rtol * max(4.0 * config.kappa**2, 0.25 * s * s)
    if abs(arg) <= tol:
        phase = PTPhase.EP
    elif arg > 0:
        phase = PTPhase.UNBROKEN
    else:
        phase = PTPhase.BROKEN
    return EigenSpectrum(omega_c, plus, minus, arg, phase is PTPhase.EP, tol, phase)


def supermodes(config: SystemConfig, I1: float) -> tuple[np.ndarray, np.ndarray]:
    """Right eigenvectors of M for the closed-form eigenvalues (columns: plus, minus)."""
    M = evolution_matrix(config, I1)
    spec = eigenfrequencies(config, I1)
    vecs = []
    # M has Delta on the diagonal; the eigenvalue of M is shift - Delta
    d = derive(config).Delta
    for lam in (spec.shift_plus - d, spec.shift_minus - d):
        # (M - lam) v = 0, take v from the first row unless it vanishes
        a, b = M[0, 0] - lam, M[0, 1]
        v = np.array([-b, a]) if abs(a) + abs(b) > 0 else np.array([M[1, 1] - lam, -M[1, 0]])
        vecs.append(v / np.linalg.norm(v))
    return vecs[0], vecs[1]


def classify_pt(config: SystemConfig, I1: float = 0.0, rtol: float = 1e-9) -> PTBalance:
    """Check A - C1 - C2 - B I1 = 0 (full) and A - C1 - C2 = 0 (linear)."""
    res, gain = config.resonators, config.gain
    sat = gain.B * I1
    scale = max(gain.A, res.C1, res.C2, sat, 1e-300)
    lin = gain.A - res.C1 - res.C2
    full = lin - sat
    return PTBalance(abs(full) <= rtol * scale, abs(lin) <= rtol * scale, full, lin)


def _intensity(config: SystemConfig, kappa: float, port: Port) -> float:
    return steady_state(with_params(config, kappa=kappa), port=port).I1


def find_EP(
    config: SystemConfig,
    port: Port | None = None,
    mode: str = "linear",
    bracket: tuple[float, float] | None = None,
    n_grid: int = 400,
    xtol: float = 1e-12,
) -> EPResult:
    """Exceptional-point coupling.

    ``linear`` evaluates the square-root argument at I1 = 0, giving
    ``|G1 + Gamma2| / 4`` (= C2/2 at the balanced condition with B = 0 and
    equal waveguide couplings). ``self_consistent`` recomputes I1(kappa) from
    the steady state for drive at ``port`` on a log grid, locates every sign
    change of the square-root argument and refines it by bracketed root
    finding. Sign changes caused by a jump between solution branches (no
    genuine zero) are dropped and mentioned in ``note``.
    """
    port = config.drive.port if port is None else Port.parse(port)
    p = derive(config)
    linear_kappa = abs(p.G1 + p.Gamma2) / 4.0
    if mode == "linear":
        return EPResult((linear_kappa,), mode, port, (linear_kappa, linear_kappa))
    if mode != "self_consistent":
        raise ValueError(f"unknown mode {mode!r}")

    B = config.gain.B
    if bracket is None:
        sat = 0.0
        if B > 0:
            try:
                sat = B * _intensity(config, 0.0, Port.PORT1) / 4.0
            except SteadyStateError:
                sat = 0.0
        hi_scale = max(linear_kappa, sat, 1e-300)
        lo = 1e-4 * max(linear_kappa, 1e-300) if linear_kappa > 0 else 1e-4 * hi_scale
        bracket = (lo, 4.0 * (linear_kappa + sat) + 1e-300)
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")

    def g(kappa: float) -> float:
        I1 = _intensity(config, kappa, port)
        return ep_discriminant(with_params(config, kappa=kappa), I1)

    grid = np.geomspace(lo, hi, n_grid)
    values = np.array([g(k) for k in grid])
    crossings, dropped = [], 0
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]:
        a, b = grid[i], grid[i + 1]
        if values[i] == 0:
            crossings.append(float(a))
            continue
        if values[i + 1] == 0:
            continue
        k = brentq(g, a, b, xtol=xtol * b, rtol=4 * np.finfo(float).eps, maxiter=200)
        # a genuine zero of the argument, not a branch jump
        scale = 4.0 * k * k
        if abs(g(k)) <= 1e-6 * scale:
            crossings.append(float(k))
        else:
            dropped += 1
    note = f"{dropped} discontinuous sign change(s) ignored" if dropped else ""
    if not crossings:
        note = (note + "; " if note else "") + "no crossing in bracket"
    return EPResult(tuple(crossings), mode, port, (lo, hi), note)
