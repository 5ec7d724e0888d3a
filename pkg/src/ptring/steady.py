"""Steady state of the driven, saturable two-resonator system.

Eliminating the passive-cavity field and the drive phase leaves a real cubic
for the active-cavity intensity ``I1 = |A1|^2``::

    l1 I^3 + l2 I^2 + l3 I + l4 = 0
    l1 = B^2/4,  l2 = B F,  l3 = F^2 + Delta^2 (f - 1)^2,
    l4 = -eps^2 (drive at port 1)  or  -f eps^2 (drive at port 4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Port, SystemConfig, derive, drive_coupling

__all__ = [
    "NoSolutionError",
    "NoTransmissionError",
    "SteadyStateError",
    "CubicCoeffs",
    "SteadyStateSolution",
    "MultistabilityReport",
    "cubic_coeffs",
    "cubic_discriminant",
    "closed_form_root",
    "solve_intensity",
    "steady_state",
    "detect_multistability",
    "amplitudes_from_intensity",
    "steady_residual",
]

_CLAMP = 1e-12
_DISC_TOL = 1e-12


class SteadyStateError(RuntimeError):
    pass


class NoSolutionError(SteadyStateError):
    """The cubic degenerates to ``l4 = 0`` with ``l4 != 0``."""


class NoTransmissionError(SteadyStateError):
    """Port-4 drive with zero intercavity coupling never reaches the active cavity."""


@dataclass(frozen=True)
class CubicCoeffs:
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4], dtype=float)

    def __call__(self, x):
        return ((self.lambda1 * x + self.lambda2) * x + self.lambda3) * x + self.lambda4

    def residual(self, x: float) -> float:
        """|p(x)| relative to the largest individual term."""
        terms = np.abs(self.as_array() * np.array([x**3, x**2, x, 1.0]))
        scale = terms.max()
        return abs(self(x)) / scale if scale > 0 else 0.0

    @property
    def discriminant(self) -> float:
        return cubic_discriminant(*self.as_array())


def cubic_coeffs(config: SystemConfig, omega: float | None = None, port: Port | None = None) -> CubicCoeffs:
    p = derive(config, omega)
    port = config.drive.port if port is None else Port.parse(port)
    eps = drive_coupling(config, port)
    B = config.gain.B
    l4 = -eps * eps if port is Port.PORT1 else -p.f * eps * eps
    l3 = p.F * p.F + p.Delta**2 * (p.f - 1.0) ** 2
    return CubicCoeffs(0.25 * B * B, B * p.F, l3, l4)


def cubic_discriminant(a: float, b: float, c: float, d: float) -> float:
    """Discriminant of a x^3 + b x^2 + c x + d; negative means a single real root."""
    return 18 * a * b * c * d - 4 * b**3 * d + b * b * c * c - 4 * a * c**3 - 27 * a * a * d * d


def _disc_sign(a: float, b: float, c: float, d: float) -> int:
    terms = np.array([18 * a * b * c * d, -4 * b**3 * d, b * b * c * c, -4 * a * c**3, -27 * a * a * d * d])
    disc = terms.sum()
    if abs(disc) <= _DISC_TOL * np.abs(terms).sum():
        return 0
    return 1 if disc > 0 else -1


def closed_form_root(a: float, b: float, c: float, d: float) -> float:
    """The single real root of a x^3 + b x^2 + c x + d (negative discriminant).

    Cardano's form x = (y^2 - 2 b y + 4 b^2 - 12 a c) / (6 a y) with
    y^3 = 12 sqrt(3) a sqrt(-disc) + 36 a b c - 108 a^2 d - 8 b^3. The sign of
    the square-root term is chosen to avoid cancellation in y^3; both signs
    give the same real root.
    """
    D = 27 * a * a * d * d - 18 * a * b * c * d + 4 * a * c**3 + 4 * b**3 * d - b * b * c * c
    if D < 0:
        D = 0.0
    rest = 36 * a * b * c - 108 * a * a * d - 8 * b**3
    root_term = 12.0 * math.sqrt(3.0) * abs(a) * math.sqrt(D)
    y3 = rest + math.copysign(root_term, rest) if rest != 0 else root_term
    y = np.cbrt(y3)
    if y == 0:
        # triple root
        return -b / (3 * a)
    return (y * y - 2 * b * y + 4 * b * b - 12 * a * c) / (6 * a * y)


def _scale(l: np.ndarray) -> float:
    """Intensity unit in which the physical root is O(1)."""
    l1, l2, l3, l4 = np.abs(l)
    if l4 == 0:
        cands = [math.sqrt(l3 / l1) if l1 > 0 and l3 > 0 else 0.0, l3 / l2 if l2 > 0 else 0.0, l2 / l1 if l1 > 0 else 0.0]
        cands = [x for x in cands if x > 0]
        return min(cands) if cands else 1.0
    cands = []
    if l3 > 0:
        cands.append(l4 / l3)
    if l2 > 0:
        cands.append(math.sqrt(l4 / l2))
    if l1 > 0:
        cands.append(np.cbrt(l4 / l1))
    return min(cands) if cands else 1.0


def _newton(poly: np.ndarray, x: float, iters: int = 3) -> float:
    a, b, c, d = poly
    for _ in range(iters):
        p = ((a * x + b) * x + c) * x + d
        dp = (3 * a * x + 2 * b) * x + c
        if dp == 0 or p == 0:
            break
        step = p / dp
        x_new = x - step
        p_new = ((a * x_new + b) * x_new + c) * x_new + d
        if abs(p_new) >= abs(p):
            break
        x = x_new
    return x


def _scaled(coeffs: CubicCoeffs) -> tuple[np.ndarray, float]:
    l = coeffs.as_array()
    s = _scale(l)
    scaled = l * np.array([s**3, s**2, s, 1.0])
    norm = np.abs(scaled).max()
    return scaled / norm, s


def _closed_form_scaled(poly: np.ndarray) -> float:
    """Closed-form root, evaluated both directly and through the reciprocal cubic.

    The reciprocal form avoids cancellation when the saturation term is weak,
    the direct form when the root is large compared to the scale; the candidate
    with the smaller relative polynomial residual is kept.
    """
    a, b, c, d = poly
    cands = [closed_form_root(a, b, c, d)]
    if d != 0:
        with np.errstate(divide="ignore"):
            cands.append(1.0 / closed_form_root(d, c, b, a))

    def rel_residual(x: float) -> float:
        if not math.isfinite(x):
            return math.inf
        terms = np.abs([a * x**3, b * x * x, c * x, d])
        return abs(((a * x + b) * x + c) * x + d) / max(terms.sum(), 1e-300)

    return min(cands, key=rel_residual)


def solve_intensity(coeffs: CubicCoeffs, *, polish: bool = True) -> tuple[list[float], int]:
    """Non-negative real roots of the intensity cubic and the discriminant sign.

    Returns ``(roots, sign)`` with roots ascending. ``sign`` is -1 for a single
    real root, +1 for three distinct real roots and 0 for a repeated root; the
    linear case (``l1 = l2 = 0``) reports -1.
    """
    l1, l2, l3, l4 = coeffs.as_array()
    if l1 == 0 and l2 == 0:
        if l3 == 0:
            if l4 == 0:
                return [0.0], -1
            raise NoSolutionError("linear intensity equation with zero slope and nonzero drive")
        return [max(-l4 / l3, 0.0)], -1

    poly, s = _scaled(coeffs)
    a, b, c, d = poly
    if a == 0:
        # quadratic (not reachable from physical coefficients)
        raw = np.roots(poly[1:])
        sign = -1
    else:
        sign = _disc_sign(a, b, c, d)
        if sign < 0:
            raw = np.array([_closed_form_scaled(poly)])
        else:
            raw = np.roots(poly)
            raw = raw.real[np.abs(raw.imag) <= 1e-7 * np.maximum(1.0, np.abs(raw))]
            if sign == 0 and len(raw) < 3:
                # the companion solve split a double root into a conjugate pair
                raw = np.roots(poly).real
    roots = []
    for y in np.atleast_1d(raw):
        y = float(y)
        if polish:
            y = _newton(poly, y)
        if y < 0:
            if abs(y) <= _CLAMP * max(1.0, abs(b / a) if a else 1.0):
                y = 0.0
            else:
                continue
        roots.append(y * s)
    roots = sorted(roots)
    deduped: list[float] = []
    for r in roots:
        if deduped and abs(r - deduped[-1]) <= 1e-9 * max(abs(r), s):
            continue
        deduped.append(r)
    return deduped, sign


def _general_roots(coeffs: CubicCoeffs) -> list[float]:
    """Companion-matrix roots polished by Newton; used as an independent path."""
    poly, s = _scaled(coeffs)
    raw = np.roots(poly)
    out = []
    for z in raw:
        if abs(z.imag) <= 1e-7 * max(1.0, abs(z)):
            out.append(_newton(poly, float(z.real), iters=6) * s)
    return sorted(out)


@dataclass(frozen=True)
class SteadyStateSolution:
    I1: float
    I2: float
    phi1: float
    A1: complex
    A2: complex
    n_real_roots: int
    all_real_roots: tuple[float, ...]
    direction: Port
    residual: float = 0.0
    stability: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class MultistabilityReport:
    discriminant_sign: int
    n_roots: int
    roots: tuple[float, ...]
    stability: tuple[str, ...]

    @property
    def multistable(self) -> bool:
        return self.n_roots > 1

    @property
    def classification(self) -> str:
        return "multistable" if self.multistable else "monostable"


def amplitudes_from_intensity(
    config: SystemConfig, I1: float, omega: float | None = None, port: Port | None = None
) -> tuple[complex, complex, float]:
    """Field amplitudes (A1, A2) and drive-frame phase phi1 for a cubic root ``I1``.

    The phase follows from the real/imaginary split of the reduced
    active-cavity equation; for port-4 driving the effective drive on the
    active cavity carries the extra factor kappa / (i Delta - Gamma2/2).
    """
    p = derive(config, omega)
    port = config.drive.port if port is None else Port.parse(port)
    eps = drive_coupling(config, port)
    B = config.gain.B
    G1p = p.G1 - B * I1
    if port is Port.PORT1:
        eps_eff = complex(eps)
    else:
        if config.kappa == 0:
            raise NoTransmissionError("port-4 drive with kappa = 0 cannot reach the active cavity")
        eps_eff = eps * config.kappa / complex(-0.5 * p.Gamma2, p.Delta)
    amp = math.sqrt(I1)
    mag = abs(eps_eff)
    if mag == 0:
        phi = 0.0
        A1 = complex(amp)
    else:
        cos_phi = amp * (G1p - p.f * p.Gamma2) / (2.0 * mag)
        sin_phi = amp * p.Delta * (p.f - 1.0) / mag
        phi = math.atan2(sin_phi, cos_phi) + math.atan2(eps_eff.imag, eps_eff.real)
        A1 = amp * complex(math.cos(phi), math.sin(phi))
    if port is Port.PORT1:
        A2 = config.kappa * A1 / complex(0.5 * p.Gamma2, -p.Delta)
    else:
        A2 = complex(p.Delta * 1j + 0.5 * G1p) * A1 / config.kappa
    return A1, A2, phi


def steady_residual(config: SystemConfig, A1: complex, A2: complex, omega: float | None = None, port: Port | None = None) -> float:
    """Relative residual of both steady-state rows (drive on the driven row)."""
    p = derive(config, omega)
    port = config.drive.port if port is None else Port.parse(port)
    eps = drive_coupling(config, port)
    B, k = config.gain.B, config.kappa
    t1 = [(1j * p.Delta + 0.5 * p.G1) * A1, -k * A2, -0.5 * B * abs(A1) ** 2 * A1]
    t2 = [(1j * p.Delta - 0.5 * p.Gamma2) * A2, k * A1]
    if port is Port.PORT1:
        t1.append(-eps)
    else:
        t2.append(-eps)
    scale = max(max(abs(t) for t in t1 + t2), 1e-300)
    return max(abs(sum(t1)), abs(sum(t2))) / scale


def _select_root(config, roots, omega, port):
    if len(roots) == 1:
        return roots[0], ()
    from .dynamics import stability_of_root

    labels = tuple(stability_of_root(config, omega, port, r) for r in roots)
    for r, lab in zip(roots, labels):
        if lab == "stable":
            return r, labels
    return roots[0], labels


def steady_state(config: SystemConfig, omega: float | None = None, port: Port | None = None) -> SteadyStateSolution:
    """Steady-state fields for drive at ``port`` (defaults to the configured port).

    With several real roots the smallest stable one is returned as the
    primary solution; all roots stay available in ``all_real_roots``.
    """
    port = config.drive.port if port is None else Port.parse(port)
    if port is Port.PORT4 and config.kappa == 0:
        raise NoTransmissionError("port-4 drive with kappa = 0 cannot reach the active cavity")
    coeffs = cubic_coeffs(config, omega, port)
    roots, _ = solve_intensity(coeffs)
    if not roots:
        raise SteadyStateError(f"no non-negative real root for {coeffs}")
    I1, labels = _select_root(config, roots, omega, port)
    A1, A2, phi = amplitudes_from_intensity(config, I1, omega, port)
    eps = drive_coupling(config, port)
    if eps > 0 and I1 > 0:
        # cos^2 + sin^2 = 1 is the cubic itself; a failure flags a bad root
        p = derive(config, omega)
        mag2 = eps * eps * (1.0 if port is Port.PORT1 else p.f)
        z = complex(0.5 * (p.G1 - config.gain.B * I1 - p.f * p.Gamma2), p.Delta * (1.0 - p.f))
        unit = I1 * abs(z) ** 2 / mag2
        if abs(unit - 1.0) > 1e-9:
            raise SteadyStateError(f"phase reconstruction failed: cos^2+sin^2 = {unit!r}")
    res = steady_residual(config, A1, A2, omega, port)
    return SteadyStateSolution(
        I1=I1,
        I2=abs(A2) ** 2,
        phi1=phi,
        A1=A1,
        A2=A2,
        n_real_roots=len(roots),
        all_real_roots=tuple(roots),
        direction=port,
        residual=res,
        stability=labels,
    )


def detect_multistability(config: SystemConfig, omega: float | None = None, port: Port | None = None) -> MultistabilityReport:
    from .dynamics import stability_of_root

    port = config.drive.port if port is None else Port.parse(port)
    coeffs = cubic_coeffs(config, omega, port)
    roots, sign = solve_intensity(coeffs)
    labels = ()
    if not (port is Port.PORT4 and config.kappa == 0):
        labels = tuple(stability_of_root(config, omega, port, r) for r in roots)
    return MultistabilityReport(sign, len(roots), tuple(roots), labels)
