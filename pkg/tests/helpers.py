"""Shared parameter sets and an independent linear oracle."""

import numpy as np

from ptring.model import make_config

MHz = 1e6
GHz = 1e9


def fig3_config(epsilon=1 * MHz, kappa=0.5 * MHz, port=1, B=0.05, detuning=0.0):
    """Balanced-linear pair: A = 301 MHz, C1 = 300 MHz, C2 = 1 MHz, gamma = 1.15 MHz."""
    return make_config(
        A=301 * MHz, B=B, C1=300 * MHz, C2=1 * MHz, gamma1=1.15 * MHz, kappa=kappa,
        epsilon=epsilon, port=port, detuning=detuning,
    )


def waveguide_config(A, kappa, power, port=1, detuning=0.0):
    """Losses carried by the waveguides only: gamma1 = 25 MHz, gamma2 = 10 MHz, B = 0.1 Hz."""
    return make_config(
        A=A, B=0.1, gamma1=25 * MHz, gamma2=10 * MHz, kappa=kappa,
        power=power, wavelength=1550e-9, port=port, detuning=detuning,
    )


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_config(rng, B=None, port=1, below_threshold=True):
    C1 = log_uniform(rng, 0.1 * MHz, 10 * MHz)
    C2 = log_uniform(rng, 0.1 * MHz, 10 * MHz)
    g1 = log_uniform(rng, 0.1 * MHz, 10 * MHz)
    g2 = log_uniform(rng, 0.1 * MHz, 10 * MHz)
    A = rng.uniform(0, 0.95 if below_threshold else 2.0) * (C1 + g1)
    return make_config(
        A=A,
        B=log_uniform(rng, 1e-3, 1.0) if B is None else B,
        C1=C1, C2=C2, gamma1=g1, gamma2=g2,
        kappa=log_uniform(rng, 0.01 * MHz, 5 * MHz),
        epsilon=log_uniform(rng, 1e3, 1e9),
        detuning=rng.uniform(-5, 5) * MHz,
        port=port,
    )


def linear_fields(config, port=1):
    """Direct 2x2 complex solve of the linear (B = 0) steady-state equations."""
    from ptring.model import derive, drive_coupling

    p = derive(config)
    k = config.kappa
    M = np.array([[1j * p.Delta + 0.5 * p.G1, -k], [k, 1j * p.Delta - 0.5 * p.Gamma2]])
    eps = drive_coupling(config, port)
    rhs = np.array([eps, 0.0]) if port == 1 else np.array([0.0, eps])
    return np.linalg.solve(M, rhs)
