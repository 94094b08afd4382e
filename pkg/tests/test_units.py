import math
import warnings
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from bec_optomech.units import (
    HBAR, M_RB87, TWO_PI, ParameterError, ScanProtocol, SystemParams, default_scan,
    effective_mass, light_shift, optomech_coupling, oscillator_length, recoil_frequency,
    sigma_plus,
)

# frozen from plain arithmetic on the CODATA constants, independent of the package
U0_HZ = 3712.8125000000005
WREC_HZ = 3773.307076495394
G_HZ = 454724.8067813585
M_EFF = 1.2537156786227926e-14


def test_light_shift_default():
    assert light_shift(TWO_PI * 10.9e6, TWO_PI * 32e9) / TWO_PI == pytest.approx(U0_HZ, rel=1e-12)


def test_light_shift_sign_and_zero():
    assert light_shift(0.0, 1.0) == 0.0
    assert light_shift(TWO_PI * 10.9e6, -TWO_PI * 32e9) < 0
    with pytest.raises(ParameterError, match="resonant pump unsupported"):
        light_shift(1.0, 0.0)


def test_recoil_frequency():
    w = recoil_frequency(780e-9, M_RB87)
    assert w / TWO_PI == pytest.approx(WREC_HZ, rel=1e-12)
    assert recoil_frequency(1560e-9, M_RB87) == pytest.approx(w / 4, rel=1e-14)
    assert 4 * w / TWO_PI == pytest.approx(15.1e3, rel=5e-3)


def test_coupling():
    U0 = TWO_PI * U0_HZ
    assert optomech_coupling(U0, 1.2e5) / TWO_PI == pytest.approx(G_HZ, rel=1e-12)
    assert optomech_coupling(U0, 2) == pytest.approx(U0 / 2, rel=1e-15)
    assert optomech_coupling(U0, 0) == 0


def test_effective_mass(params):
    assert params.m_eff == pytest.approx(M_EFF, rel=1e-9)
    assert 0.008e-12 < params.m_eff < 0.015e-12


def test_effective_mass_scaling_and_roundtrip(params):
    m = effective_mass(params.g, params.cavity_length, params.omega_c, params.omega_m)
    m4 = effective_mass(4 * params.g, params.cavity_length, params.omega_c, params.omega_m)
    assert m4 == pytest.approx(m / 16, rel=1e-13)
    a = oscillator_length(params.g, params.cavity_length, params.omega_c)
    assert math.sqrt(HBAR / (2 * m * params.omega_m)) == pytest.approx(a, rel=1e-12)


def test_dispersive_shift_window(params):
    assert 200e6 <= params.dispersive_shift / TWO_PI <= 230e6


def test_g_over_kappa(params):
    assert 0.25 <= params.g / params.kappa <= 0.40


@pytest.mark.parametrize("field,value", [
    ("kappa", 0.0), ("N", 0.5), ("wavelength", -1.0), ("mass", 0.0), ("delta_a", 0.0), ("eta", -1.0),
])
def test_validation(field, value):
    with pytest.raises(ParameterError):
        replace(SystemParams(), **{field: value})


def test_small_detuning_warns():
    with pytest.warns(UserWarning, match="spontaneous emission"):
        SystemParams(delta_a=TWO_PI * 1e9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SystemParams()


def test_sigma_plus_doubles_coupling(params):
    assert sigma_plus(params).g / params.g == pytest.approx(2.0, rel=1e-14)


def test_scan_protocol():
    s = ScanProtocol(1.0, rate=2.0, duration=1.0, direction=-1)
    assert s.delta_c(3.0) == -5.0
    assert ScanProtocol(1.0, rate=0.0).delta_c(10.0) == 1.0
    with pytest.raises(ParameterError):
        ScanProtocol(0.0, duration=0.0)
    with pytest.raises(ParameterError):
        ScanProtocol(0.0, direction=2)


def test_default_scan_offset(params):
    s = default_scan(params)
    assert (s.delta_c_start - params.dispersive_shift) / TWO_PI == pytest.approx(-15e6)


@given(st.floats(1e5, 1e8), st.floats(1e8, 1e11))
def test_derived_quantities_pure(g0, da):
    p = SystemParams(g0=TWO_PI * g0, delta_a=TWO_PI * da, gamma=TWO_PI * 1.0)
    q = SystemParams(g0=TWO_PI * g0, delta_a=TWO_PI * da, gamma=TWO_PI * 1.0)
    assert (p.U0, p.g, p.m_eff, p.omega_m) == (q.U0, q.g, q.m_eff, q.omega_m)
    assert p.U0 == light_shift(p.g0, p.delta_a)


@given(st.floats(1e-4, 50.0))
def test_with_photons(photons):
    p = SystemParams().with_photons(photons)
    assert p.pump_photons == pytest.approx(photons, rel=1e-12)


def test_recoil_scales(params):
    sc = params.scales
    assert sc.energy == pytest.approx(HBAR * params.omega_rec)
    assert sc.length * params.k == pytest.approx(1.0)
