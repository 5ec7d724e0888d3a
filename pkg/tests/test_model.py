import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptring.model import (
    HBAR,
    SPEED_OF_LIGHT,
    ConfigError,
    DomainError,
    GainParams,
    Port,
    ResonatorParams,
    SystemConfig,
    DriveConfig,
    derive,
    drive_coupling,
    epsilon_from_power,
    gain_coefficients,
    make_config,
    saturation_from_maxwell_bloch,
    with_params,
)

from helpers import MHz, fig3_config

rates = st.floats(min_value=0.0, max_value=1e9, allow_nan=False)


def test_zero_coupling_gives_f_zero():
    p = derive(fig3_config(kappa=0.0, detuning=0.3 * MHz))
    assert p.f == 0.0
    assert p.F == -p.G1 / 2


def test_passive_total_loss():
    assert derive(fig3_config()).Gamma2 == pytest.approx(2.15 * MHz, rel=1e-15)


def test_f_unity_example():
    cfg = make_config(C2=1 * MHz, gamma2=1 * MHz, kappa=1 * MHz)
    assert derive(cfg).f == pytest.approx(1.0, rel=1e-15)


def test_net_gain_includes_saturation_shift():
    cfg = make_config(A=10.0, B=4.0, C1=1.0, gamma1=2.0)
    assert derive(cfg).G1 == pytest.approx(10.0 - 3.0 - 7.0)


def test_explicit_omega_matches_detuning():
    cfg = make_config(omega_c=1e9, detuning=2e5, kappa=1e5, gamma1=1e5)
    assert derive(cfg, 1e9 + 2e5).Delta == pytest.approx(2e5, rel=1e-6)


@given(C2=rates, g2=rates, kappa=rates, delta=st.floats(-1e9, 1e9))
def test_derive_is_pure_and_f_nonnegative(C2, g2, kappa, delta):
    cfg = make_config(C2=C2, gamma2=g2, gamma1=1.0, kappa=kappa, detuning=delta)
    a, b = derive(cfg), derive(cfg)
    assert a == b
    assert a.f >= 0 or math.isinf(a.f)


def test_gain_coefficients_examples():
    assert gain_coefficients(0.0, 5.0, 2.0) == (0.0, 0.0)
    G = 3.0
    A, B = gain_coefficients(G, G, G)
    assert A == pytest.approx(2 * G) and B == pytest.approx(8 * G)


@given(st.floats(1e-3, 1e6), st.floats(0, 1e6), st.floats(1e-3, 1e6))
def test_gain_ratio_identity(g, r, Gam):
    A, B = gain_coefficients(g, r, Gam)
    assert B * Gam**2 == pytest.approx(4 * g * g * A, rel=1e-14, abs=1e-300)


def test_gain_coefficients_zero_decay():
    with pytest.raises(DomainError):
        gain_coefficients(1.0, 1.0, 0.0)


def test_epsilon_from_power():
    assert epsilon_from_power(0.0, 1550e-9, 25 * MHz) == 0.0
    P = 100e-9
    photon = HBAR * 2 * math.pi * SPEED_OF_LIGHT / 1550e-9
    assert photon == pytest.approx(1.282e-19, rel=1e-3)
    eps = epsilon_from_power(P, 1550e-9, 25 * MHz)
    assert eps == pytest.approx(math.sqrt(25 * MHz * P / photon), rel=1e-14)
    assert epsilon_from_power(4 * P, 1550e-9, 25 * MHz) == pytest.approx(2 * eps, rel=1e-15)
    with pytest.raises(DomainError):
        epsilon_from_power(P, 0.0, 1.0)


def test_saturation_from_maxwell_bloch():
    assert saturation_from_maxwell_bloch(301 * MHz, 6.02e9) == pytest.approx(0.05, rel=1e-12)
    assert saturation_from_maxwell_bloch(1.0, 1e300) < 1e-299
    A = 7.3
    assert saturation_from_maxwell_bloch(A, 11.0) * 11.0 == pytest.approx(A)
    with pytest.raises(DomainError):
        saturation_from_maxwell_bloch(1.0, 0.0)


def test_quality_factor_consistency():
    res = ResonatorParams.from_quality(1e15, 1e8, 2e8, 1e6, 1e6)
    assert res.C1 == pytest.approx(1e7)
    with pytest.raises(ConfigError) as exc:
        ResonatorParams(1e15, 1e7 * (1 + 1e-9), 5e6, 1e6, 1e6, Q1=1e8)
    assert exc.value.field == "resonators.Q1"


def test_microscopic_gain_must_match():
    GainParams.from_microscopic(1.0, 2.0, 3.0)
    with pytest.raises(ConfigError):
        GainParams(1.0, 1.0, 1.0, 2.0, 3.0)
    with pytest.raises(ConfigError):
        GainParams(1.0, 1.0, g=1.0)


@pytest.mark.parametrize("field,kwargs", [
    ("kappa", {"kappa": -1.0}),
    ("resonators.C1", {"C1": -1.0}),
    ("gain.B", {"B": -0.1}),
    ("drive.epsilon", {"epsilon": -2.0}),
])
def test_negative_rates_rejected(field, kwargs):
    with pytest.raises(ConfigError) as exc:
        make_config(**kwargs)
    assert exc.value.field == field


def test_power_and_epsilon_must_agree():
    res = ResonatorParams(1e15, 0, 0, 25 * MHz, 10 * MHz)
    with pytest.raises(ConfigError):
        SystemConfig(res, GainParams(0, 0), 0.0, DriveConfig(Port.PORT1, 1.0, 0.0, power=1e-7, wavelength=1550e-9))


def test_power_drive_coupling_per_port():
    cfg = make_config(gamma1=25 * MHz, gamma2=10 * MHz, power=1e-6, wavelength=1550e-9)
    e1, e4 = drive_coupling(cfg, Port.PORT1), drive_coupling(cfg, Port.PORT4)
    assert e1 == pytest.approx(epsilon_from_power(1e-6, 1550e-9, 25 * MHz))
    assert e1 / e4 == pytest.approx(math.sqrt(2.5))


def test_with_params_updates_and_rederives():
    cfg = make_config(gamma1=25 * MHz, gamma2=10 * MHz, power=1e-6, wavelength=1550e-9)
    up = with_params(cfg, power=4e-6, kappa=3.0)
    assert up.kappa == 3.0
    assert up.drive.epsilon == pytest.approx(2 * cfg.drive.epsilon)
    plain = with_params(cfg, epsilon=5.0)
    assert plain.drive.power is None and plain.drive.epsilon == 5.0
    both = with_params(fig3_config(), gamma=2.0)
    assert both.resonators.gamma1 == both.resonators.gamma2 == 2.0
    with pytest.raises(KeyError):
        with_params(cfg, nonsense=1.0)


def test_port_parsing():
    assert Port.parse("4->1") is Port.PORT4
    assert Port.parse(1) is Port.PORT1
    assert Port.PORT1.label == "1->4"
    with pytest.raises(ValueError):
        Port.parse("2")


def test_configs_are_immutable():
    cfg = fig3_config()
    with pytest.raises(AttributeError):
        cfg.kappa = 2.0
    assert np.isfinite(cfg.omega_l)
