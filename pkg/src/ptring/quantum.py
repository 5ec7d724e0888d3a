"""Truncated two-mode Fock-space master equations for the driven resonator pair.

The state lives in the frame rotating at the drive frequency, where the
Hamiltonian (hbar = 1) is time independent::

    H = -Delta (n1 + n2) + i kappa (a1 a2^† - a1^† a2) + i eps (a_d - a_d^†)

with ``a_d`` the driven mode. Two dissipators are available:

* ``NON_LINDBLADIAN``: X + X^† with
  X = A/2 (a1^† ρ a1 - N1 ρ) + B/8 (ρ N1^2 + 3 N1 ρ N1 - 4 a1^† ρ N1 a1)
      + Σ_i Γ_i/2 (a_i ρ a_i^† - n_i ρ),      N1 = a1 a1^†
* ``LINDBLAD``: jump operators √A a1^†(1 - B/(2A) N1), (1/2)√(3B) N1,
  √Γ1 a1, √Γ2 a2.

The two agree up to terms of order B^2/A.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .model import Port, SystemConfig, derive, drive_coupling
from .dynamics import IntegratorConfig

__all__ = [
    "CutoffWarning",
    "IntegrationQualityError",
    "MasterEquationForm",
    "FockBasisSpec",
    "DensityMatrix",
    "Generator",
    "QuantumExpectations",
    "QuantumTrajectory",
    "ResidualReport",
    "build_generator",
    "evolve",
    "expectations",
    "rate_equation_residual",
    "default_cutoff",
    "vacuum",
    "coherent_state",
    "thermal_state",
    "trace_norm",
]


class CutoffWarning(UserWarning):
    pass


class IntegrationQualityError(RuntimeError):
    pass


class MasterEquationForm(Enum):
    NON_LINDBLADIAN = "non_lindbladian"
    LINDBLAD = "lindblad"


def _ladder(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


@dataclass(frozen=True)
class FockBasisSpec:
    """Product Fock basis |n1, n2>, cutoffs inclusive, mode 2 index fastest."""

    n_max_1: int
    n_max_2: int
    max_dim: int = 4096

    def __post_init__(self):
        if self.n_max_1 < 1 or self.n_max_2 < 1:
            raise ValueError("photon-number cutoffs must be >= 1")
        if self.dim > self.max_dim:
            raise ValueError(f"Hilbert dimension {self.dim} exceeds the budget {self.max_dim}")

    @property
    def dim(self) -> int:
        return (self.n_max_1 + 1) * (self.n_max_2 + 1)

    @property
    def a1(self) -> np.ndarray:
        return np.kron(_ladder(self.n_max_1), np.eye(self.n_max_2 + 1))

    @property
    def a2(self) -> np.ndarray:
        return np.kron(np.eye(self.n_max_1 + 1), _ladder(self.n_max_2))

    def top_layer(self) -> np.ndarray:
        """Boolean mask of basis states at either cutoff."""
        n1, n2 = np.divmod(np.arange(self.dim), self.n_max_2 + 1)
        return (n1 == self.n_max_1) | (n2 == self.n_max_2)


@dataclass
class DensityMatrix:
    data: np.ndarray
    basis: FockBasisSpec
    leakage_threshold: float = 1e-6

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    @property
    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    @property
    def top_population(self) -> float:
        return float(np.real(np.diag(self.data))[self.basis.top_layer()].sum())

    @property
    def leaking(self) -> bool:
        return self.top_population > self.leakage_threshold

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min())

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10) -> None:
        if self.data.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("density matrix shape does not match basis")
        if self.hermiticity_error > herm_tol:
            raise ValueError(f"density matrix not Hermitian (error {self.hermiticity_error:.3e})")
        if abs(self.trace - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {self.trace} differs from 1")


def vacuum(basis: FockBasisSpec) -> DensityMatrix:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[0, 0] = 1.0
    return DensityMatrix(rho, basis)


def _coherent_vector(n_max: int, alpha: complex) -> np.ndarray:
    n = np.arange(n_max + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    with np.errstate(divide="ignore"):
        mag = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * log_fact) if alpha != 0 else (n == 0).astype(float)
    vec = mag * np.exp(1j * n * np.angle(alpha))
    return vec / np.linalg.norm(vec)


def coherent_state(basis: FockBasisSpec, alpha1: complex, alpha2: complex = 0.0) -> DensityMatrix:
    """Product of truncated, renormalised coherent states."""
    psi = np.kron(_coherent_vector(basis.n_max_1, alpha1), _coherent_vector(basis.n_max_2, alpha2))
    return DensityMatrix(np.outer(psi, psi.conj()), basis)


def thermal_state(basis: FockBasisSpec, nbar1: float, nbar2: float = 0.0) -> DensityMatrix:
    def diag(n_max, nbar):
        if nbar == 0:
            p = (np.arange(n_max + 1) == 0).astype(float)
        else:
            q = nbar / (1.0 + nbar)
            p = q ** np.arange(n_max + 1)
        return p / p.sum()

    p = np.kron(diag(basis.n_max_1, nbar1), diag(basis.n_max_2, nbar2))
    return DensityMatrix(np.diag(p).astype(complex), basis)


def default_cutoff(config: SystemConfig, port: Port | None = None) -> int:
    """max(8, 4 * ceil(n_est)) with n_est the classical intracavity photon number."""
    from .steady import steady_state

    port = config.drive.port if port is None else Port.parse(port)
    try:
        sol = steady_state(config, port=port)
        n_est = max(sol.I1, sol.I2)
    except (ArithmeticError, ValueError, RuntimeError):
        n_est = 0.0
    return max(8, 4 * math.ceil(n_est))


class Generator:
    """The map ρ -> dρ/dt, applied through dense mode-operator products."""

    def __init__(self, config: SystemConfig, basis: FockBasisSpec, form: MasterEquationForm, port: Port):
        self.config = config
        self.basis = basis
        self.form = form
        self.port = port
        p = derive(config)
        self.derived = p
        A, B = config.gain.A, config.gain.B
        eps = drive_coupling(config, port)
        self.epsilon = eps
        a1, a2 = basis.a1, basis.a2
        a1d, a2d = a1.conj().T, a2.conj().T
        n1, n2 = a1d @ a1, a2d @ a2
        N1 = a1 @ a1d
        ad = a1 if port is Port.PORT1 else a2
        k = config.kappa
        self.H = -p.Delta * (n1 + n2) + 1j * k * (a1 @ a2d - a1d @ a2) + 1j * eps * (ad - ad.conj().T)
        self._mH = -1j * self.H
        self._a1, self._a1d, self._a2, self._a2d = a1, a1d, a2, a2d
        G1c, G2c = p.Gamma1, p.Gamma2
        self._G1, self._G2 = G1c, G2c
        if form is MasterEquationForm.NON_LINDBLADIAN:
            # X(ρ) = K ρ + ρ R + a1^† ρ Q + (3B/8) N1 ρ N1 + Σ Γ/2 a ρ a^†.
            # X(ρ) + X(ρ)^† is only real-linear; X(ρ) + X(ρ^†)^† is the complex-linear
            # map that agrees with it on Hermitian ρ.
            K = -0.5 * A * N1 - 0.5 * G1c * n1 - 0.5 * G2c * n2
            R = (B / 8.0) * (N1 @ N1)
            self._left = self._mH + K + R.conj().T
            self._right = -self._mH + K.conj().T + R
            self._Q = 0.5 * A * a1 - 0.5 * B * (N1 @ a1)
            self._Qd = self._Q.conj().T
            self._N1 = N1
            self._cN = 3.0 * B / 4.0
        else:
            if A == 0 and B > 0:
                raise ValueError("the Lindblad form needs A > 0 when B > 0")
            ops = []
            if A > 0:
                ops.append(math.sqrt(A) * a1d @ (np.eye(basis.dim) - (B / (2.0 * A)) * N1))
            if B > 0:
                ops.append(0.5 * math.sqrt(3.0 * B) * N1)
            if G1c > 0:
                ops.append(math.sqrt(G1c) * a1)
            if G2c > 0:
                ops.append(math.sqrt(G2c) * a2)
            self._L = ops
            self._Ld = [L.conj().T for L in ops]
            LdL = sum((Ld @ L for L, Ld in zip(ops, self._Ld)), np.zeros((basis.dim, basis.dim), dtype=complex))
            # effective non-Hermitian part: -iH - LdL/2
            self._Keff = self._mH - 0.5 * LdL

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        if self.form is MasterEquationForm.NON_LINDBLADIAN:
            out = self._left @ rho + rho @ self._right
            out += self._a1d @ rho @ self._Q + self._Qd @ rho @ self._a1
            out += self._cN * (self._N1 @ rho @ self._N1)
            out += self._G1 * (self._a1 @ rho @ self._a1d) + self._G2 * (self._a2 @ rho @ self._a2d)
            return out
        out = self._Keff @ rho
        out = out + rho @ self._Keff.conj().T
        for L, Ld in zip(self._L, self._Ld):
            out += L @ rho @ Ld
        return out

    def superoperator(self) -> np.ndarray:
        """Dense d^2 x d^2 matrix of the map on row-major vec(ρ); small bases only."""
        d = self.basis.dim
        if d > 64:
            raise ValueError("superoperator materialisation is limited to dimension <= 64")
        S = np.empty((d * d, d * d), dtype=complex)
        E = np.zeros((d, d), dtype=complex)
        for j in range(d * d):
            E.flat[j] = 1.0
            S[:, j] = self(E).ravel()
            E.flat[j] = 0.0
        return S


def build_generator(
    config: SystemConfig,
    basis: FockBasisSpec,
    form: MasterEquationForm = MasterEquationForm.NON_LINDBLADIAN,
    port: Port | None = None,
) -> Generator:
    port = config.drive.port if port is None else Port.parse(port)
    from .steady import steady_state

    try:
        sol = steady_state(config, port=port)
        n_est = max(sol.I1, sol.I2)
    except (ArithmeticError, ValueError, RuntimeError):
        n_est = 0.0
    if n_est > 0.5 * min(basis.n_max_1, basis.n_max_2):
        warnings.warn(
            f"estimated photon number {n_est:.3g} exceeds half the cutoff ({basis.n_max_1}, {basis.n_max_2})",
            CutoffWarning,
            stacklevel=2,
        )
    return Generator(config, basis, MasterEquationForm(form), port)


@dataclass(frozen=True)
class QuantumExpectations:
    a1: complex
    a2: complex
    n1: float
    n2: float
    a1dag_a1_a1: complex
    trace: complex
    purity: float
    top_population: float


def expectations(rho: DensityMatrix | np.ndarray, basis: FockBasisSpec | None = None) -> QuantumExpectations:
    if isinstance(rho, DensityMatrix):
        basis = rho.basis if basis is None else basis
        mat = rho.data
    else:
        mat = np.asarray(rho)
    if basis is None:
        raise ValueError("basis required for a bare matrix")
    a1, a2 = basis.a1, basis.a2
    a1d = a1.conj().T
    n1 = a1d @ a1
    tr = lambda op: complex(np.trace(op @ mat))  # noqa: E731
    top = float(np.real(np.diag(mat))[basis.top_layer()].sum())
    return QuantumExpectations(
        a1=tr(a1),
        a2=tr(a2),
        n1=tr(n1).real,
        n2=tr(a2.conj().T @ a2).real,
        a1dag_a1_a1=tr(n1 @ a1),
        trace=complex(np.trace(mat)),
        purity=float(np.real(np.vdot(mat, mat))),
        top_population=top,
    )


@dataclass
class QuantumTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)
    basis: FockBasisSpec
    form: MasterEquationForm
    trace_drift: float
    positivity_violations: list[tuple[float, float]] = field(default_factory=list)
    leakage: float = 0.0

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix(self.states[-1], self.basis)

    def expectations(self) -> list[QuantumExpectations]:
        return [expectations(s, self.basis) for s in self.states]


def evolve(
    rho0: DensityMatrix,
    generator: Generator,
    t_final: float,
    integrator_config: IntegratorConfig | None = None,
    n_samples: int = 50,
    trace_limit: float = 1e-6,
    positivity_tol: float = 1e-8,
    check_positivity: bool = True,
) -> QuantumTrajectory:
    """Integrate dρ/dt = L(ρ) and sample ``n_samples + 1`` equally spaced states.

    Each sampling interval is an independent adaptive Runge-Kutta solve, after
    which ρ is re-symmetrised to (ρ + ρ^†)/2. Negative eigenvalues below
    ``-positivity_tol`` are recorded rather than raised, since the
    non-Lindbladian form is only positive in the weak-saturation regime.
    """
    cfg = integrator_config or IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    rho0.validate()
    d = rho0.basis.dim
    times = np.linspace(0.0, t_final, n_samples + 1)

    def f(_t, y):
        return generator(y.reshape(d, d)).ravel()

    y = rho0.data.astype(complex).ravel()
    states = [rho0.data.astype(complex)]
    violations: list[tuple[float, float]] = []
    drift = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        sol = solve_ivp(f, (t0, t1), y, method=cfg.method, rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step)
        if sol.status != 0:
            raise IntegrationQualityError(f"integration failed at t={t0:.6e}: {sol.message}")
        rho = sol.y[:, -1].reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        drift = max(drift, abs(np.trace(rho) - 1.0))
        if drift > trace_limit:
            raise IntegrationQualityError(f"trace drift {drift:.3e} at t={t1:.6e}")
        if check_positivity:
            lam = float(np.linalg.eigvalsh(rho).min())
            if lam < -positivity_tol:
                violations.append((float(t1), lam))
        states.append(rho)
        y = rho.ravel()
    stack = np.array(states)
    leak = float(np.real(np.diagonal(stack[-1]))[rho0.basis.top_layer()].sum())
    return QuantumTrajectory(times, stack, rho0.basis, generator.form, drift, violations, leak)


def trace_norm(x: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T))).sum())


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    scale: float
    residual_a1: np.ndarray
    residual_a2: np.ndarray

    @property
    def relative(self) -> float:
        return self.max_residual / self.scale if self.scale > 0 else 0.0


def _derivative(y: np.ndarray, h: float) -> tuple[np.ndarray, slice]:
    """Fourth-order central difference on the interior points [2, n-2)."""
    d = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12.0 * h)
    return d, slice(2, len(y) - 2)


def rate_equation_residual(traj: QuantumTrajectory, config: SystemConfig, port: Port | None = None) -> ResidualReport:
    """Mismatch between d<a_j>/dt along the trajectory and the mean-field rate equations.

    The left side is a finite difference of the sampled expectations; the
    right side is built from expectations, including the third moment
    <a1^† a1 a1> of the saturation term. Samples must be equally spaced.
    """
    port = config.drive.port if port is None else Port.parse(port)
    p = derive(config)
    eps = drive_coupling(config, port)
    B, k = config.gain.B, config.kappa
    ex = traj.expectations()
    a1 = np.array([e.a1 for e in ex])
    a2 = np.array([e.a2 for e in ex])
    m3 = np.array([e.a1dag_a1_a1 for e in ex])
    h = np.diff(traj.times)
    if len(traj.times) < 5 or not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("need at least 5 equally spaced samples")
    da1, sl = _derivative(a1, h[0])
    da2, _ = _derivative(a2, h[0])
    drive1 = eps if port is Port.PORT1 else 0.0
    drive2 = eps if port is Port.PORT4 else 0.0
    rhs1 = (1j * p.Delta + 0.5 * p.G1) * a1 - k * a2 - 0.5 * B * m3 - drive1
    rhs2 = (1j * p.Delta - 0.5 * p.Gamma2) * a2 + k * a1 - drive2
    r1 = np.abs(da1 - rhs1[sl])
    r2 = np.abs(da2 - rhs2[sl])
    rate = max(p.Gamma1, p.Gamma2, config.gain.A, k, abs(p.Delta), abs(p.G1), 1e-300)
    amp = max(np.abs(a1).max(), np.abs(a2).max(), eps / rate)
    scale = rate * amp
    worst = max(r1.max(initial=0.0), r2.max(initial=0.0))
    return ResidualReport(float(worst), float(scale), r1, r2)
