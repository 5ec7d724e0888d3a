import cmath

import numpy as np
import pytest

from ptring.dynamics import (
    IntegratorConfig,
    StiffnessError,
    TrajectoryState,
    integrate,
    jacobian,
    rhs,
    stability_of_root,
)
from ptring.model import derive, make_config, with_params
from ptring.steady import steady_state

from helpers import GHz, MHz, fig3_config, random_config

ZERO = TrajectoryState(0.0, 0j, 0j)


def test_undriven_origin_is_fixed():
    assert rhs(ZERO, fig3_config(epsilon=0.0)) == (0j, 0j)


@pytest.mark.parametrize("port", [1, 4])
def test_steady_state_is_fixed_point(port):
    cfg = fig3_config(epsilon=2 * GHz, kappa=0.4 * MHz, port=port, detuning=0.1 * MHz)
    s = steady_state(cfg)
    d1, d2 = rhs(TrajectoryState(0.0, s.A1, s.A2), cfg)
    p = derive(cfg)
    scale = max(abs(p.G1), p.Gamma2) * max(abs(s.A1), abs(s.A2))
    assert max(abs(d1), abs(d2)) < 1e-9 * scale


def test_homogeneous_part_is_linear_without_saturation():
    cfg = fig3_config(B=0.0, epsilon=3.0, kappa=0.4 * MHz)
    x = TrajectoryState(0.0, 1 + 2j, -0.5j)
    alpha = 2.5 - 1j
    ax = TrajectoryState(0.0, alpha * x.A1, alpha * x.A2)
    drive = np.array([-3.0, 0.0])
    fx = np.array(rhs(x, cfg)) - drive
    fax = np.array(rhs(ax, cfg)) - drive
    np.testing.assert_allclose(fax, alpha * fx, rtol=1e-13)


def test_analytic_decay():
    G1 = 1 * MHz
    cfg = make_config(gamma1=G1, gamma2=G1, detuning=0.3 * MHz)
    t_end = 5 / G1
    traj = integrate(TrajectoryState(0.0, 1 + 0j, 0j), cfg, IntegratorConfig(max_time=t_end, rel_tol=1e-12, abs_tol=1e-14))
    expected = cmath.exp((0.3j * MHz - G1 / 2) * t_end)
    assert traj.terminal.t == pytest.approx(t_end)
    assert abs(traj.terminal.A1 - expected) < 1e-8


def test_converges_to_cubic_root():
    cfg = fig3_config(epsilon=2 * GHz, kappa=0.3 * MHz)
    traj = integrate(ZERO, cfg)
    assert traj.converged and traj.reason == "converged"
    assert traj.intensity1 == pytest.approx(steady_state(cfg).I1, rel=1e-6)


def test_free_running_laser_intensity():
    cfg = make_config(A=3 * MHz, B=0.01, C1=0.5 * MHz, gamma1=0.5 * MHz, gamma2=1 * MHz)
    G1 = derive(cfg).G1
    traj = integrate(TrajectoryState(0.0, 10 + 0j, 0j), cfg)
    assert traj.converged
    # G1/2 = (B/2) I1 at the nonzero fixed point
    assert traj.intensity1 == pytest.approx(G1 / cfg.gain.B, rel=1e-6)


def test_jacobian_matches_finite_differences():
    cfg = fig3_config(epsilon=2 * GHz, kappa=0.4 * MHz, detuning=0.2 * MHz)
    A1, A2 = 3000 - 400j, -200 + 50j
    J = jacobian(cfg, A1, A2)

    def f(v):
        d1, d2 = rhs(TrajectoryState(0.0, complex(v[0], v[1]), complex(v[2], v[3])), cfg)
        return np.array([d1.real, d1.imag, d2.real, d2.imag])

    v0 = np.array([A1.real, A1.imag, A2.real, A2.imag])
    num = np.empty((4, 4))
    for j in range(4):
        h = 1e-4 * max(1.0, abs(v0[j]))
        e = np.zeros(4)
        e[j] = h
        num[:, j] = (f(v0 + e) - f(v0 - e)) / (2 * h)
    np.testing.assert_allclose(J, num, rtol=1e-6, atol=1e-6 * np.abs(J).max())


def test_below_threshold_linear_is_stable():
    cfg = fig3_config(B=0.0, epsilon=1 * GHz, kappa=0.8 * MHz)
    assert stability_of_root(cfg, None, None, steady_state(cfg).I1) == "stable"


@pytest.mark.parametrize("eps", [1 * MHz, 2 * GHz, 20.5 * GHz, 25 * GHz])
@pytest.mark.parametrize("kappa", [0.1 * MHz, 0.5 * MHz, 1.5 * MHz])
def test_fig3_roots_are_stable(eps, kappa):
    cfg = fig3_config(epsilon=eps, kappa=kappa)
    s = steady_state(cfg)
    assert s.n_real_roots == 1
    assert stability_of_root(cfg, None, None, s.I1) == "stable"


def test_perturbed_start_returns_to_root():
    rng = np.random.default_rng(31)
    for _ in range(5):
        cfg = random_config(rng)
        s = steady_state(cfg)
        if s.n_real_roots != 1:
            continue
        start = TrajectoryState(0.0, s.A1 * 1.1 + 0.05 * abs(s.A1), s.A2 * 0.9)
        assert integrate(start, cfg).intensity1 == pytest.approx(s.I1, rel=1e-6)


def test_tolerance_halving_is_consistent():
    cfg = fig3_config(epsilon=2 * GHz, kappa=0.3 * MHz)
    t_end = 3 / MHz
    a = integrate(ZERO, cfg, IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, max_time=t_end, convergence_eps=1e-300))
    b = integrate(ZERO, cfg, IntegratorConfig(rel_tol=5e-9, abs_tol=5e-11, max_time=t_end, convergence_eps=1e-300))
    assert abs(a.terminal.A1 - b.terminal.A1) < 10 * 1e-8 * abs(a.terminal.A1)


def test_lab_and_rotating_frames_agree():
    wc = 20 * MHz
    cfg = make_config(A=0.5 * MHz, B=1e-3, C1=0.5 * MHz, gamma1=0.5 * MHz, C2=0.5 * MHz, kappa=0.7 * MHz,
                      epsilon=1e3 * MHz, omega_c=wc, detuning=0.3 * MHz)
    t_end = 4 / MHz
    ic = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-9, max_time=t_end)
    rot = integrate(ZERO, cfg, ic)
    lab = integrate(TrajectoryState(0.0, 0j, 0j, "lab"), cfg, ic)
    phase = cmath.exp(-1j * cfg.omega_l * t_end)
    assert lab.terminal.A1 == pytest.approx(rot.terminal.A1 * phase, rel=1e-7)
    assert lab.terminal.A2 == pytest.approx(rot.terminal.A2 * phase, rel=1e-7)


def test_runaway_growth_raises_with_state():
    cfg = make_config(A=50 * MHz, B=0.0, gamma1=1 * MHz, gamma2=1 * MHz, epsilon=1.0)
    with pytest.raises(StiffnessError) as exc:
        integrate(ZERO, cfg, IntegratorConfig(max_time=1e-3))
    assert exc.value.state.t > 0


def test_state_validation():
    with pytest.raises(ValueError):
        TrajectoryState(0.0, complex("nan"), 0j)
    with pytest.raises(ValueError):
        TrajectoryState(0.0, 0j, 0j, "sideways")
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
