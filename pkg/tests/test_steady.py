import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptring.model import Port, derive, make_config, with_params
from ptring.steady import (
    CubicCoeffs,
    NoSolutionError,
    NoTransmissionError,
    _general_roots,
    cubic_coeffs,
    detect_multistability,
    solve_intensity,
    steady_residual,
    steady_state,
)

from helpers import GHz, MHz, fig3_config, linear_fields, random_config


def _brute_force_coeffs(config, port):
    """Fit the cubic I |z(I)|^2 - eps_eff^2 from four evaluations of the reduced equation."""
    p = derive(config)
    B, eps = config.gain.B, config.drive.epsilon
    eps2 = eps * eps * (1.0 if port == 1 else p.f)

    def g(I):
        z = 1j * p.Delta * (1 - p.f) + 0.5 * (p.G1 - B * I - p.f * p.Gamma2)
        return I * abs(z) ** 2 - eps2

    scale = 1e7
    xs = np.array([0.0, 1.0, 2.0, 3.0]) * scale
    c = np.polyfit(xs / scale, [g(x) for x in xs], 3)
    return c / np.array([scale**3, scale**2, scale, 1.0])


def test_linear_degenerates():
    c = cubic_coeffs(fig3_config(B=0.0, epsilon=1 * GHz, kappa=1 * MHz))
    assert c.lambda1 == 0 and c.lambda2 == 0


def test_resonance_lambda3_is_F_squared():
    cfg = fig3_config(epsilon=2 * GHz, kappa=1 * MHz)
    assert cubic_coeffs(cfg).lambda3 == derive(cfg).F ** 2


@pytest.mark.parametrize("port", [1, 4])
def test_coefficients_match_substitution(port):
    cfg = fig3_config(epsilon=2 * GHz, kappa=1 * MHz, port=port)
    ours = cubic_coeffs(cfg).as_array()
    ref = _brute_force_coeffs(cfg, port)
    np.testing.assert_allclose(ours, ref, rtol=1e-6)


def test_port_changes_only_constant_term():
    cfg = fig3_config(epsilon=2 * GHz, kappa=0.7 * MHz, detuning=0.2 * MHz)
    c1, c4 = cubic_coeffs(cfg, port=Port.PORT1), cubic_coeffs(cfg, port=Port.PORT4)
    assert c1.as_array()[:3].tolist() == c4.as_array()[:3].tolist()
    assert c4.lambda4 == pytest.approx(derive(cfg).f * c1.lambda4, rel=1e-15)


def test_linear_root():
    roots, sign = solve_intensity(CubicCoeffs(0, 0, 4, -8))
    assert roots == [2.0] and sign == -1


def test_undriven_decaying_cavity():
    cfg = make_config(A=1.0, B=0.5, C1=2.0, gamma1=1.0, epsilon=0.0)
    roots, _ = solve_intensity(cubic_coeffs(cfg))
    assert roots == [0.0]


def test_no_solution():
    with pytest.raises(NoSolutionError):
        solve_intensity(CubicCoeffs(0, 0, 0, -1))


@pytest.mark.parametrize("eps", [1 * MHz, 2 * GHz, 20.5 * GHz, 25 * GHz])
def test_fig3_root_curve_decreases_with_coupling(eps):
    # stronger coupling drains the active cavity into the lossy passive one
    kappas = np.linspace(0.05, 2.0, 40) * MHz
    I1 = [steady_state(fig3_config(epsilon=eps, kappa=k)).I1 for k in kappas]
    assert np.all(np.diff(I1) < 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 4]))
def test_roots_satisfy_polynomial(seed, port):
    cfg = random_config(np.random.default_rng(seed), port=port, below_threshold=False)
    c = cubic_coeffs(cfg)
    roots, _ = solve_intensity(c)
    for r in roots:
        assert r >= 0
        assert c.residual(r) < 1e-10


@pytest.mark.parametrize("port", [1, 4])
def test_linear_regime_matches_direct_solve(port):
    rng = np.random.default_rng(7)
    for _ in range(200):
        cfg = random_config(rng, B=0.0, port=port)
        s = steady_state(cfg)
        A1, A2 = linear_fields(cfg, port)
        assert s.A1 == pytest.approx(A1, rel=1e-9)
        assert s.A2 == pytest.approx(A2, rel=1e-9)
        if port == 1:
            assert s.I2 == pytest.approx(derive(cfg).f * s.I1, rel=1e-12)


def test_linear_reciprocity_of_intensities():
    rng = np.random.default_rng(11)
    for _ in range(200):
        cfg = random_config(rng, B=0.0)
        fwd = steady_state(cfg, port=Port.PORT1).I1
        back = steady_state(cfg, port=Port.PORT4).I1
        assert back == pytest.approx(derive(cfg).f * fwd, rel=1e-12)


def test_single_saturated_cavity_bisection_oracle():
    cfg = make_config(A=2 * MHz, B=0.05, C1=1 * MHz, gamma1=1.15 * MHz, epsilon=3 * GHz)
    p = derive(cfg)
    F = -p.G1 / 2
    B, eps = cfg.gain.B, cfg.drive.epsilon

    def h(I):
        return B * B / 4 * I**3 + B * F * I**2 + F * F * I - eps * eps

    lo, hi = 0.0, 1.0
    while h(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if h(mid) < 0 else (lo, mid)
    assert steady_state(cfg).I1 == pytest.approx(0.5 * (lo + hi), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 4]))
def test_back_substitution(seed, port):
    cfg = random_config(np.random.default_rng(seed), port=port)
    s = steady_state(cfg)
    assert abs(s.A1) ** 2 == pytest.approx(s.I1, rel=1e-10)
    assert steady_residual(cfg, s.A1, s.A2) < 1e-9
    assert s.residual < 1e-9


def test_port4_without_coupling():
    with pytest.raises(NoTransmissionError):
        steady_state(fig3_config(kappa=0.0, port=4))


def test_intensity_increases_with_drive():
    base = fig3_config(kappa=0.3 * MHz)
    eps = np.geomspace(1 * MHz, 50 * GHz, 60)
    I1 = [steady_state(with_params(base, epsilon=e)).I1 for e in eps]
    assert np.all(np.diff(I1) > 0)


def test_gain_equal_to_loss_is_monostable():
    rng = np.random.default_rng(3)
    for _ in range(300):
        cfg = random_config(rng)
        cfg = with_params(cfg, A=cfg.resonators.C1 + cfg.resonators.gamma1)
        assert detect_multistability(cfg).classification == "monostable"


def test_linear_is_monostable():
    assert not detect_multistability(fig3_config(B=0.0, epsilon=1 * GHz)).multistable


def test_bistable_lasing_cavity():
    # above threshold with detuning: I (G1 - B I)^2/4 + Delta^2 I is not monotone
    cfg = make_config(A=12.75, B=1.0, C1=1.0, gamma1=0.0, gamma2=1.0, epsilon=np.sqrt(20.0), detuning=1.0)
    report = detect_multistability(cfg)
    assert report.discriminant_sign == 1 and report.n_roots == 3
    assert report.stability[1] == "unstable"
    assert len(_general_roots(cubic_coeffs(cfg))) == 3
    s = steady_state(cfg)
    assert s.n_real_roots == 3
    assert s.I1 == report.roots[report.stability.index("stable")]


def test_phase_quadrant_off_resonance():
    cfg = fig3_config(B=0.0, epsilon=1 * GHz, kappa=0.4 * MHz, detuning=-0.8 * MHz)
    s = steady_state(cfg)
    A1, _ = linear_fields(cfg)
    assert s.phi1 == pytest.approx(np.angle(A1), abs=1e-9)


def test_closed_form_large_root_with_negative_quadratic_term():
    # single root near -lambda2/lambda1, far above the drive-limited scale
    c = CubicCoeffs(3.646065962426051e-08, -20735874.452911455, 1.7782163178576782e-08, -3.3808146962179286e-07)
    assert c.discriminant < 0
    (root,), sign = solve_intensity(c, polish=False)
    assert sign == -1
    assert root == pytest.approx(-c.lambda2 / c.lambda1, rel=1e-9)
    assert c.residual(root) < 1e-12
