"""Time-domain integration of the semiclassical coupled-mode equations.

Rotating frame (drive frequency)::

    dA1/dt = (i Delta + G1/2) A1 - kappa A2 - (B/2)|A1|^2 A1 - eps [port 1]
    dA2/dt = (i Delta - Gamma2/2) A2 + kappa A1              - eps [port 4]

The lab frame replaces i Delta by -i omega_c and the constant drive by
eps * exp(-i omega_l t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import Port, SystemConfig, derive, drive_coupling

__all__ = [
    "StiffnessError",
    "TrajectoryState",
    "IntegratorConfig",
    "Trajectory",
    "rhs",
    "integrate",
    "jacobian",
    "stability_of_root",
    "rate_scale",
]

FRAMES = ("rotating", "lab")


class StiffnessError(RuntimeError):
    def __init__(self, message: str, state: "TrajectoryState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    A1: complex
    A2: complex
    frame: str = "rotating"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if not all(math.isfinite(v) for v in (self.t, self.A1.real, self.A1.imag, self.A2.real, self.A2.imag)):
            raise ValueError("non-finite trajectory state")


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances for :func:`integrate`. Times are in seconds.

    ``convergence_window`` / ``max_time`` of ``None`` are chosen from the
    slowest linear decay rate of the configuration.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_time: float | None = None
    convergence_window: float | None = None
    convergence_eps: float = 1e-9
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.convergence_eps > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    frame: str
    terminal: TrajectoryState
    converged: bool
    reason: str
    n_steps: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def intensity1(self) -> float:
        return abs(self.terminal.A1) ** 2

    @property
    def intensity2(self) -> float:
        return abs(self.terminal.A2) ** 2


def rate_scale(config: SystemConfig) -> float:
    """Largest rate in the configuration, used to nondimensionalise time."""
    res, gain = config.resonators, config.gain
    p = derive(config)
    rates = [res.C1 + res.gamma1, res.C2 + res.gamma2, gain.A, config.kappa, abs(p.Delta), abs(p.G1)]
    return max(max(rates), 1e-300)


def _coefficients(config: SystemConfig, port: Port, frame: str):
    p = derive(config)
    eps = drive_coupling(config, port)
    if frame == "rotating":
        rot = 1j * p.Delta
    else:
        rot = -1j * config.resonators.omega_c
    return (rot + 0.5 * p.G1, rot - 0.5 * p.Gamma2, config.kappa, config.gain.B, eps, config.omega_l)


def _field_rhs(t, A1, A2, coefs, port, frame):
    d1c, d2c, k, B, eps, omega_l = coefs
    dA1 = d1c * A1 - k * A2 - 0.5 * B * (A1.real**2 + A1.imag**2) * A1
    dA2 = d2c * A2 + k * A1
    drive = eps if frame == "rotating" else eps * np.exp(-1j * omega_l * t)
    if port is Port.PORT1:
        dA1 = dA1 - drive
    else:
        dA2 = dA2 - drive
    return dA1, dA2


def rhs(state: TrajectoryState, config: SystemConfig, port: Port | None = None) -> tuple[complex, complex]:
    """Time derivative (dA1/dt, dA2/dt) at ``state`` in the state's frame."""
    port = config.drive.port if port is None else Port.parse(port)
    coefs = _coefficients(config, port, state.frame)
    d1, d2 = _field_rhs(state.t, complex(state.A1), complex(state.A2), coefs, port, state.frame)
    return complex(d1), complex(d2)


def jacobian(config: SystemConfig, A1: complex, A2: complex, omega: float | None = None, port: Port | None = None) -> np.ndarray:
    """4x4 real Jacobian of the rotating-frame equations in (Re A1, Im A1, Re A2, Im A2)."""
    p = derive(config, omega)
    B, k = config.gain.B, config.kappa
    # df = a dz + b dz*  ->  d/dx = a + b,  d/dy = i (a - b)
    a11 = 1j * p.Delta + 0.5 * p.G1 - B * abs(A1) ** 2
    b11 = -0.5 * B * A1 * A1
    blocks = {
        (0, 0): (a11, b11),
        (0, 1): (-k, 0.0),
        (1, 0): (k, 0.0),
        (1, 1): (1j * p.Delta - 0.5 * p.Gamma2, 0.0),
    }
    J = np.zeros((4, 4))
    for (i, j), (a, b) in blocks.items():
        dx = a + b
        dy = 1j * (a - b)
        J[2 * i, 2 * j] = dx.real
        J[2 * i + 1, 2 * j] = dx.imag
        J[2 * i, 2 * j + 1] = dy.real
        J[2 * i + 1, 2 * j + 1] = dy.imag
    return J


def stability_of_root(config: SystemConfig, omega: float | None, port: Port | None, I1_root: float, tol: float = 1e-9) -> str:
    """Linear stability of the fixed point reconstructed from ``I1_root``.

    Returns ``"stable"``, ``"unstable"`` or ``"marginal"`` by the largest real
    part of the Jacobian spectrum, compared against ``tol`` times the rate scale.
    """
    from .steady import amplitudes_from_intensity

    port = config.drive.port if port is None else Port.parse(port)
    A1, A2, _ = amplitudes_from_intensity(config, I1_root, omega, port)
    J = jacobian(config, A1, A2, omega, port)
    growth = np.linalg.eigvals(J).real.max()
    scale = tol * rate_scale(config)
    if growth < -scale:
        return "stable"
    if growth > scale:
        return "unstable"
    return "marginal"


def _slowest_rate(config: SystemConfig) -> float:
    p = derive(config)
    # linear part of the evolution matrix at zero intensity
    M = np.array([[1j * p.Delta + 0.5 * p.G1, -config.kappa], [config.kappa, 1j * p.Delta - 0.5 * p.Gamma2]])
    re = np.linalg.eigvals(M).real
    slow = np.abs(re).min()
    return slow if slow > 0 else rate_scale(config) * 1e-3


def integrate(
    initial: TrajectoryState,
    config: SystemConfig,
    integrator_config: IntegratorConfig | None = None,
    port: Port | None = None,
    samples_per_window: int = 64,
) -> Trajectory:
    """Adaptive Runge-Kutta integration until ``max_time`` or convergence.

    Integration proceeds window by window. A window counts as converged when
    the sup-norm of ``(A1, A2) - (A1, A2)(t_end)`` over the whole window is
    below ``convergence_eps`` times the field scale, so a limit cycle whose
    period divides the window is not mistaken for a fixed point. Convergence
    is only tested in the rotating frame.
    """
    cfg = integrator_config or IntegratorConfig()
    port = config.drive.port if port is None else Port.parse(port)
    frame = initial.frame
    R = rate_scale(config)
    slow = _slowest_rate(config)
    window = cfg.convergence_window if cfg.convergence_window is not None else 2.0 / slow
    max_time = cfg.max_time if cfg.max_time is not None else 60.0 / slow
    coefs = _coefficients(config, port, frame)

    # time measured in units of 1/R
    def f(tau, y):
        A1 = y[0]
        A2 = y[1]
        d1, d2 = _field_rhs(initial.t + tau / R, A1, A2, coefs, port, frame)
        return np.array([d1, d2]) / R

    y = np.array([initial.A1, initial.A2], dtype=complex)
    tau, tau_end = 0.0, max_time * R
    w = window * R
    max_step = cfg.max_step * R if math.isfinite(cfg.max_step) else np.inf
    ts, a1s, a2s = [initial.t], [y[0]], [y[1]]
    n_steps = 0
    converged, reason = False, "max_time"
    while tau < tau_end * (1 - 1e-15):
        t1 = min(tau + w, tau_end)
        t_eval = np.linspace(tau, t1, samples_per_window + 1)[1:]
        # overflow in a runaway solution surfaces as a solver failure below
        with np.errstate(over="ignore", invalid="ignore"):
            sol = solve_ivp(f, (tau, t1), y, method=cfg.method, rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=max_step, t_eval=t_eval)
        n_steps += int(sol.nfev)
        if sol.status != 0:
            state = TrajectoryState(initial.t + tau / R, complex(y[0]), complex(y[1]), frame)
            raise StiffnessError(f"integration failed at t={state.t:.6e}: {sol.message}", state)
        seg = sol.y
        y = seg[:, -1]
        ts.extend(initial.t + sol.t / R)
        a1s.extend(seg[0])
        a2s.extend(seg[1])
        tau = t1
        if frame == "rotating":
            scale = max(np.abs(seg).max(), cfg.abs_tol)
            drift = np.abs(seg - y[:, None]).max()
            if drift <= cfg.convergence_eps * scale:
                converged, reason = True, "converged"
                break
    terminal = TrajectoryState(initial.t + tau / R, complex(y[0]), complex(y[1]), frame)
    return Trajectory(np.asarray(ts), np.asarray(a1s), np.asarray(a2s), frame, terminal, converged, reason, n_steps)
