"""Port-to-port transmissivities and detuning sweeps.

Input-output conventions: the probe entering through waveguide j has
``A_in = eps / sqrt(gamma_j)``; the drop ports collect ``sqrt(gamma_k) A_k``
and the through port of the active cavity collects ``A_in + sqrt(gamma1) A1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .model import Port, SystemConfig, derive, drive_coupling, with_params
from .steady import steady_state

__all__ = [
    "TransmissionError",
    "DegenerateTransmissionWarning",
    "TransmissionCurve",
    "DIRECTIONS",
    "t_forward",
    "t_backward",
    "t_through",
    "t_through_io",
    "transmissivity",
    "sweep_spectrum",
    "fwhm",
    "lineshape_fit",
]

DIRECTIONS = ("1->4", "4->1", "1->2")


class TransmissionError(ValueError):
    pass


class DegenerateTransmissionWarning(UserWarning):
    pass


def _require_drive(eps: float) -> None:
    if not eps > 0:
        raise TransmissionError("transmissivity undefined for zero drive (epsilon = 0)")


def t_forward(config: SystemConfig, omega: float | None = None) -> float:
    """T(1->4) = 4 kappa^2 gamma1 gamma2 I1 / (eps^2 (Gamma2^2 + 4 Delta^2))."""
    eps = drive_coupling(config, Port.PORT1)
    _require_drive(eps)
    if config.kappa == 0:
        return 0.0
    p = derive(config, omega)
    res = config.resonators
    I1 = steady_state(config, omega, Port.PORT1).I1
    return 4.0 * config.kappa**2 * res.gamma1 * res.gamma2 * I1 / (eps * eps * (p.Gamma2**2 + 4.0 * p.Delta**2))


def t_backward(config: SystemConfig, omega: float | None = None) -> float:
    """T(4->1) = gamma1 gamma2 I1 / eps^2 with I1 from the port-4 cubic."""
    eps = drive_coupling(config, Port.PORT4)
    _require_drive(eps)
    if config.kappa == 0:
        warnings.warn("kappa = 0: port 4 is decoupled from the active cavity", DegenerateTransmissionWarning, stacklevel=2)
        return 0.0
    res = config.resonators
    I1 = steady_state(config, omega, Port.PORT4).I1
    return res.gamma1 * res.gamma2 * I1 / (eps * eps)


def t_through(config: SystemConfig, omega: float | None = None, clamp: float = 1e-12) -> float:
    """T(1->2) = 1 + (2 gamma1 I1/eps^2)(gamma1/2 - F) - gamma1 B I1^2 / eps^2."""
    eps = drive_coupling(config, Port.PORT1)
    _require_drive(eps)
    g1 = config.resonators.gamma1
    if g1 == 0:
        return 1.0
    p = derive(config, omega)
    I1 = steady_state(config, omega, Port.PORT1).I1
    e2 = eps * eps
    T = 1.0 + (2.0 * g1 * I1 / e2) * (0.5 * g1 - p.F) - g1 * config.gain.B * I1 * I1 / e2
    if T < 0:
        if T > -clamp:
            return 0.0
        raise TransmissionError(f"negative through-port transmissivity {T!r}: inconsistent root branch")
    return T


def t_through_io(config: SystemConfig, omega: float | None = None) -> float:
    """|1 + sqrt(gamma1) A1 / A_in|^2 from the reconstructed steady-state field."""
    eps = drive_coupling(config, Port.PORT1)
    _require_drive(eps)
    g1 = config.resonators.gamma1
    A1 = steady_state(config, omega, Port.PORT1).A1
    A_in = eps / math.sqrt(g1) if g1 > 0 else math.inf
    if g1 == 0:
        return 1.0
    return abs(1.0 + math.sqrt(g1) * A1 / A_in) ** 2


def transmissivity(config: SystemConfig, direction: str, omega: float | None = None) -> float:
    if direction == "1->4":
        return t_forward(config, omega)
    if direction == "4->1":
        return t_backward(config, omega)
    if direction == "1->2":
        return t_through(config, omega)
    raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")


@dataclass(frozen=True)
class TransmissionCurve:
    direction: str
    delta: np.ndarray
    T: np.ndarray
    normalized: bool = False
    complete: bool = True
    errors: dict[float, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if len(self.delta) > 1 and not np.all(np.diff(self.delta) > 0):
            raise ValueError("detuning grid must be strictly increasing")


def sweep_spectrum(
    config: SystemConfig,
    direction: str,
    delta_grid,
    normalize: bool = False,
) -> TransmissionCurve:
    """Transmissivity on a detuning grid; failing points become NaN and are logged in ``errors``.

    Normalisation divides by the maximum over this grid only.
    """
    delta = np.asarray(delta_grid, dtype=float)
    if delta.ndim != 1 or delta.size == 0:
        raise ValueError("detuning grid must be a non-empty 1-D sequence")
    if delta.size > 1 and not np.all(np.diff(delta) > 0):
        raise ValueError("detuning grid must be strictly increasing")
    T = np.empty_like(delta)
    errors: dict[float, str] = {}
    for i, d in enumerate(delta):
        try:
            T[i] = transmissivity(with_params(config, detuning=float(d)), direction)
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            T[i] = math.nan
            errors[float(d)] = f"{type(exc).__name__}: {exc}"
    if normalize:
        peak = np.nanmax(T) if np.any(np.isfinite(T)) else math.nan
        if peak > 0:
            T = T / peak
    return TransmissionCurve(direction, delta, T, normalize, not errors, errors)


def fwhm(curve: TransmissionCurve) -> float:
    """Full width at half maximum of the main peak, by linear interpolation.

    Returns ``inf`` when the curve does not fall below half maximum on one side
    within the grid.
    """
    x, y = curve.delta, curve.T
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    i = int(np.argmax(y))
    half = 0.5 * y[i]

    def edge(indices):
        prev = i
        for j in indices:
            if y[j] < half:
                x0, x1, y0, y1 = x[prev], x[j], y[prev], y[j]
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0)
            prev = j
        return None

    left = edge(range(i - 1, -1, -1))
    right = edge(range(i + 1, len(y)))
    if left is None or right is None:
        return math.inf
    return right - left


def _lorentz(x, a, x0, w):
    return a / (1.0 + ((x - x0) / w) ** 2)


def _lorentz_sq(x, a, x0, w):
    return a / (1.0 + ((x - x0) / w) ** 2) ** 2


def lineshape_fit(curve: TransmissionCurve) -> dict:
    """Least-squares comparison of Lorentzian vs squared-Lorentzian line shapes.

    Returns the residual sum of squares of each fit and the better model.
    This is a diagnostic, not a classification criterion.
    """
    x, y = curve.delta, curve.T
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    i = int(np.argmax(y))
    width = max(fwhm(TransmissionCurve(curve.direction, x, y)) / 2.0, np.ptp(x) / len(x))
    if not math.isfinite(width):
        width = np.ptp(x) / 4.0
    out = {}
    for name, model in (("lorentzian", _lorentz), ("squared_lorentzian", _lorentz_sq)):
        try:
            popt, _ = curve_fit(model, x, y, p0=(y[i], x[i], width), maxfev=20000)
            rss = float(np.sum((model(x, *popt) - y) ** 2))
        except RuntimeError:
            popt, rss = None, math.inf
        out[name] = {"params": None if popt is None else tuple(float(v) for v in popt), "rss": rss}
    out["best"] = min(("lorentzian", "squared_lorentzian"), key=lambda k: out[k]["rss"])
    return out
