import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bec_optomech import twomode as tm
from bec_optomech.units import TWO_PI, ScanProtocol, SystemParams, default_scan

from oracles import adaptive_reference, brute_force_roots

ETA_CR_OVER_KAPPA = 0.2702733062493593  # from s_cr = 8/(3 sqrt 3), computed by hand


def test_effective_detuning(params):
    dc = params.dispersive_shift + 1e6
    assert tm.effective_detuning(0.0, params, dc) == pytest.approx(1e6, rel=1e-9)
    slope = tm.effective_detuning(1.0, params, dc) - tm.effective_detuning(0.0, params, dc)
    assert slope == pytest.approx(-params.g, rel=1e-9)
    X = -math.sqrt(2 * params.N)
    assert tm.effective_detuning(X, params, dc) == pytest.approx(dc, rel=1e-12)
    assert tm.validity_monitor(X, 0.0, params.N) > tm.VALIDITY_LIMIT


def test_adiabatic_field(params):
    eta, kappa = params.eta, params.kappa
    assert tm.adiabatic_field(0.0, eta, kappa) == pytest.approx(eta / kappa)
    assert tm.adiabatic_photons(kappa, eta, kappa) == pytest.approx(eta**2 / (2 * kappa**2))
    assert tm.adiabatic_photons(0.0, eta, kappa) == pytest.approx(7.3, rel=1e-12)


def _oracle_residual(params, dc):
    # X + C n(X) = 0 written from scratch
    U0, N = params.g0**2 / params.delta_a, params.N
    wr = 1.054571817e-34 * (TWO_PI / params.wavelength) ** 2 / (2 * params.mass)
    C = wr * U0 * math.sqrt(8 * N) / (4 * wr) ** 2
    g = 0.5 * U0 * math.sqrt(N / 2)

    def f(X):
        D = dc - 0.5 * U0 * N - g * X
        return X + C * params.eta**2 / (params.kappa**2 + D * D)

    return f


@pytest.mark.parametrize("offset_mhz", [-4.0, -3.5, -2.0, 0.0, 2.0])
def test_roots_match_brute_force(offset_mhz):
    p = SystemParams().with_photons(0.15)
    dc = p.dispersive_shift + TWO_PI * offset_mhz * 1e6
    ref = brute_force_roots(_oracle_residual(p, dc), -10.0, 10.0, 1e-6)
    got = [b.X_ss for b in tm.steady_states(p, dc)]
    assert len(got) == len(ref)
    assert np.max(np.abs(np.array(got) - np.array(ref))) < 1e-8


def test_bistable_window_topology(params):
    inside = tm.steady_states(params, TWO_PI * 200e6)
    assert len(inside) == 3
    assert [b.stability for b in inside] == [tm.STABLE, tm.UNSTABLE, tm.STABLE]
    assert len(tm.steady_states(params, TWO_PI * 215e6)) == 1
    folds = tm.fold_detunings(params)
    assert folds[1] / TWO_PI == pytest.approx(209.7e6, rel=1e-3)


def test_fold_gives_two_unstable_branches(params):
    fold = tm.fold_detunings(params)[1]
    br = tm.steady_states(params, fold)
    assert len(br) in (2, 3)
    if len(br) == 2:
        assert all(b.stability == tm.UNSTABLE for b in br)


def test_weak_pump_single_valued():
    p = SystemParams().with_photons(0.02)
    assert tm.max_root_count(p) == 1


@given(st.floats(0.0, 10.0), st.floats(-3.0, 3.0))
def test_branch_photons_consistent(photons, offset):
    p = SystemParams().with_photons(photons)
    dc = p.dispersive_shift + offset * p.kappa * (1 + photons * 20)
    for b in tm.steady_states(p, dc):
        n = p.eta**2 / (p.kappa**2 + tm.effective_detuning(b.X_ss, p, dc) ** 2)
        assert b.photons == pytest.approx(n, rel=1e-12, abs=1e-300)
        assert abs(tm.fixed_point_residual(b.X_ss, p, dc)) < 1e-8 * (1 + abs(b.X_ss))


@given(st.floats(0.01, 10.0), st.floats(-1e8, 1e8))
def test_lorentzian_limit(photons, dc):
    p = replace(SystemParams(g0=0.0).with_photons(photons))
    (b,) = tm.steady_states(p, dc)
    expected = p.eta**2 / (p.kappa**2 + dc**2)
    assert b.photons == pytest.approx(expected, rel=1e-12)
    assert b.X_ss == 0.0


@given(st.floats(0.1, 10.0))
def test_root_count_parity(photons):
    p = SystemParams().with_photons(photons)
    counts = [len(tm.steady_states(p, dc)) for dc in tm.detuning_sweep(p, 801)]
    assert set(counts) <= {1, 2, 3}
    # entering and leaving the window: transitions come in pairs
    changes = sum(1 for a, b in zip(counts, counts[1:]) if (a == 1) != (b == 1))
    assert changes % 2 == 0


def test_critical_pump(params):
    eta = tm.critical_pump(params)
    assert eta / params.kappa == pytest.approx(ETA_CR_OVER_KAPPA, rel=2e-4)
    assert tm.max_root_count(replace(params, eta=0.9 * eta)) == 1
    assert tm.max_root_count(replace(params, eta=1.05 * eta)) == 3


def test_free_field_rotation(params):
    p0 = replace(params, eta=0.0)
    dX, dp = tm.phase_space_field(1.0, 0.0, p0, 0.0)
    assert dX == 0.0
    assert 2 * dp == pytest.approx(-params.omega_m)  # clockwise
    th = np.linspace(0, TWO_PI, 17)
    r = 3.0
    dX, dp = tm.phase_space_field(r * np.cos(th), 0.5 * r * np.sin(th), p0, 0.0)
    assert np.allclose(np.hypot(dX, 2 * dp), params.omega_m * r, rtol=1e-12)


def test_light_force_peaks_on_resonance_line(params):
    dc = TWO_PI * 205e6
    X_res = (dc - params.dispersive_shift) / params.g
    X = X_res + np.linspace(-20, 20, 40001)
    _, dp = tm.phase_space_field(X, 0.0, params, dc)
    light = 2 * dp + params.omega_m * X
    assert abs(X[np.argmax(np.abs(light))] - X_res) <= 1e-3
    total = np.abs(2 * dp)
    assert abs(X[np.argmax(total)] - X_res) < params.kappa / params.g


def test_free_oscillator_1000_cycles(params):
    p0 = replace(params, eta=0.0)
    A = 5.0
    periods = 1000
    scan = ScanProtocol(0.0, rate=0.0, duration=periods * TWO_PI / params.omega_m)
    tr = tm.integrate_scan(tm.MechCavityState(A, 0.0, 0.0), p0, scan, sample_interval=5e-6)
    assert np.max(np.abs(tr.X - A * np.cos(params.omega_m * tr.t))) / A < 1e-6
    R2 = tr.X**2 + (2 * tr.p) ** 2
    assert np.max(np.abs(R2 / A**2 - 1)) < 1e-9


def _past_fold_scan(params, duration=0.5e-3):
    fold = tm.fold_detunings(params)[1]
    return ScanProtocol(fold - TWO_PI * 1e6, duration=duration)


def test_oracle_equivalence(params):
    scan = _past_fold_scan(params)
    tr = tm.integrate_scan(None, params, scan)
    b = tm.lower_stable_state(params, scan.delta_c_start)
    f = tm._rhs_adiabatic(params, scan)
    ref = adaptive_reference(lambda t, y: f(t, y), [b.X_ss, 0.0], scan.duration, tr.t)
    assert np.ptp(tr.X) > 50  # oscillations happened
    assert np.max(np.abs(tr.X - ref[0])) / np.max(np.abs(ref[0])) < 1e-6


def test_step_halving(params):
    scan = _past_fold_scan(params)
    a = tm.integrate_scan(None, params, scan, dt=100e-9)
    b = tm.integrate_scan(None, params, scan, dt=50e-9)
    assert abs(a.X[-1] - b.X[-1]) / abs(b.X[-1]) < 1e-6
    p0 = replace(params, eta=0.0)
    free = ScanProtocol(0.0, rate=0.0, duration=1e-3)
    a = tm.integrate_scan(tm.MechCavityState(3.0, 0.0, 0.0), p0, free, dt=100e-9)
    b = tm.integrate_scan(tm.MechCavityState(3.0, 0.0, 0.0), p0, free, dt=50e-9)
    assert abs(a.X[-1] - b.X[-1]) / 3.0 < 1e-6


def _deviation(params, dc, branch, kick=1e-6, periods=10):
    scan = ScanProtocol(dc, rate=0.0, duration=periods * TWO_PI / params.omega_m)
    tr = tm.integrate_scan(tm.MechCavityState(branch.X_ss + kick, 0.0, 0.0), params, scan)
    return np.hypot(tr.X - branch.X_ss, 2 * tr.p)


def test_stability_matches_perturbation(params):
    dc = TWO_PI * 200e6
    lo, mid, hi = tm.steady_states(params, dc)
    # the adiabatic model is conservative: stable roots are centres, so the
    # deviation stays bounded instead of decaying
    for b in (lo, hi):
        assert np.max(_deviation(params, dc, b)) < 10e-6
    assert _deviation(params, dc, mid)[-1] > 1e-3


def test_validity_violation_truncates(params):
    big = math.sqrt(0.098 * params.N)
    scan = ScanProtocol(params.dispersive_shift, rate=0.0, duration=0.2e-3)
    tr = tm.integrate_scan(tm.MechCavityState(0.0, big, 0.0), params, scan)
    assert not tr.valid
    assert tr.violation_time is not None and tr.t[-1] <= tr.violation_time + 1e-12
    assert len(tr.t) < 401
    with pytest.raises(ValueError):
        tm.integrate_scan(tm.MechCavityState(0.0, 2 * big, 0.0), params, scan)


def test_dynamic_cavity_close_to_adiabatic(params):
    scan = _past_fold_scan(params, 0.45e-3)
    ad = tm.integrate_scan(None, params, scan)
    dy = tm.integrate_scan(None, params, scan, dt=5e-9, cavity="dynamic")
    assert np.max(np.abs(ad.X - dy.X)) / np.ptp(ad.X) < 0.05


def test_trajectory_csv(tmp_path, params):
    scan = default_scan(params, duration=20e-6)
    tr = tm.integrate_scan(None, params, scan)
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "X", "P_over_hbar", "photons", "delta_c"]
    assert float(rows[1][4]) == pytest.approx(scan.delta_c_start / TWO_PI)
    assert len(rows) == len(tr.t) + 1


def test_steady_csv(tmp_path, params):
    rows = tm.steady_sweep(params, [TWO_PI * 200e6, TWO_PI * 215e6])
    tm.write_steady_csv(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "delta_c,X_ss,photons,stability"
    assert len(lines) == 1 + 3 + 1
