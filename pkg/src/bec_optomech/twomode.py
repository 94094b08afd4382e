"""Homogeneous two-mode model: a mechanical oscillator (the 2hbar*k density
mode of the condensate) coupled by radiation pressure to the cavity field.

The oscillator coordinates are the dimensionless displacement ``X`` and
``p = P/hbar``. In the free case they rotate clockwise in the ``(X, 2p)``
plane at ``omega_m = 4*omega_rec``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import rk
from .units import TWO_PI, ParameterError, ScanProtocol, SystemParams

STABLE = "stable"
UNSTABLE = "unstable"
VALIDITY_LIMIT = 0.1


class BistabilityNotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class MechCavityState:
    X: float
    p: float  # P / hbar
    alpha: complex = 0j
    t: float = 0.0

    def validity(self, N: float) -> float:
        return validity_monitor(self.X, self.p, N)


@dataclass(frozen=True)
class SteadyBranch:
    X_ss: float
    photons: float
    stability: str
    delta: float


def validity_monitor(X, p, N):
    """Depletion |c2|^2/|c0|^2 of the zero-momentum mode, (X^2/4 + p^2)/N."""
    return (0.25 * X * X + p * p) / N


def effective_detuning(X, params: SystemParams, delta_c):
    """Pump detuning from the atom-shifted cavity resonance, affine in X."""
    return delta_c - params.dispersive_shift - params.g * X


def adiabatic_field(Delta, eta, kappa):
    """Steady-state cavity amplitude alpha = eta/(kappa - i*Delta)."""
    if kappa <= 0:
        raise ParameterError("kappa must be > 0")
    return eta / (kappa - 1j * Delta)


def adiabatic_photons(Delta, eta, kappa):
    return eta * eta / (kappa * kappa + Delta * Delta)


def force_constant(params: SystemParams) -> float:
    """Coefficient K in  X'' + omega_m^2 X = -K |alpha|^2."""
    return params.omega_rec * params.U0 * math.sqrt(8.0 * params.N)


def displacement_per_photon(params: SystemParams) -> float:
    """Static displacement per photon, K/omega_m^2 (X_ss = -C |alpha|^2)."""
    return force_constant(params) / params.omega_m**2


def _stiffness(X, params: SystemParams, delta_c):
    """omega_m^2 + K d|alpha|^2/dX; negative means a saddle."""
    Delta = effective_detuning(X, params, delta_c)
    k2 = params.kappa**2 + Delta * Delta
    dn_dX = 2.0 * params.g * Delta * params.eta**2 / (k2 * k2)
    return params.omega_m**2 + force_constant(params) * dn_dX


def fixed_point_residual(X, params: SystemParams, delta_c):
    """Zero at steady states: X + C |alpha(X)|^2."""
    Delta = effective_detuning(X, params, delta_c)
    return X + displacement_per_photon(params) * adiabatic_photons(Delta, params.eta, params.kappa)


def _fold_strength(params: SystemParams) -> float:
    return params.g * displacement_per_photon(params) * params.eta**2 / params.kappa**3


def _real_roots_y(d: float, s: float) -> List[float]:
    """Real roots of (y - d)(1 + y^2) = s, with y = Delta/kappa."""
    roots = np.roots([1.0, -d, 1.0, -d - s])
    scale = 1.0 + abs(d) + abs(s)
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-6 * scale:
            y = r.real
            for _ in range(50):
                fy = (y - d) * (1.0 + y * y) - s
                dfy = (1.0 + y * y) + 2.0 * y * (y - d)
                if dfy == 0:
                    break
                step = fy / dfy
                y -= step
                if abs(step) <= 1e-15 * (1.0 + abs(y)):
                    break
            out.append(y)
    out.sort()
    merged: List[float] = []
    for y in out:
        if merged and abs(y - merged[-1]) <= 1e-9 * (1.0 + abs(y)):
            continue
        merged.append(y)
    return merged


def steady_states(params: SystemParams, delta_c: float) -> List[SteadyBranch]:
    """All steady states at fixed delta_c, sorted by displacement."""
    kappa, eta = params.kappa, params.eta
    D = params.shifted_detuning(delta_c)
    if params.g == 0 or eta == 0:
        photons = adiabatic_photons(D, eta, kappa)
        X = -displacement_per_photon(params) * photons
        return [SteadyBranch(X, photons, STABLE, D)]

    ys = _real_roots_y(D / kappa, _fold_strength(params))
    branches = []
    for y in ys:
        Delta = kappa * y
        X = (D - Delta) / params.g
        photons = adiabatic_photons(Delta, eta, kappa)
        stab = STABLE if _stiffness(X, params, delta_c) > 0 else UNSTABLE
        branches.append(SteadyBranch(X, photons, stab, Delta))
    if len(branches) == 2:
        # exactly at a fold
        branches = [SteadyBranch(b.X_ss, b.photons, UNSTABLE, b.delta) for b in branches]
    branches.sort(key=lambda b: b.X_ss)
    return branches


def fold_detunings(params: SystemParams) -> List[float]:
    """delta_c values of the fold points (empty below the bistability threshold).

    Folds are the turning points of delta_c(y) = kappa*(y - s/(1+y^2)) + U0 N/2,
    i.e. real roots of y^4 + 2y^2 + 2sy + 1 = 0.
    """
    s = _fold_strength(params)
    if s <= 0:
        return []
    ys = [r.real for r in np.roots([1.0, 0.0, 2.0, 2.0 * s, 1.0]) if abs(r.imag) < 1e-9]
    return sorted(params.kappa * (y - s / (1.0 + y * y)) + params.dispersive_shift for y in ys)


def detuning_sweep(params: SystemParams, n: int = 2001) -> np.ndarray:
    """Delta_c grid covering the tilted resonance plus the fold window midpoint."""
    shift = params.dispersive_shift
    tilt = abs(params.g * displacement_per_photon(params)) * params.pump_photons
    half = 6.0 * params.kappa + tilt
    grid = list(np.linspace(shift - half, shift + half, n))
    folds = fold_detunings(params)
    if len(folds) == 2:
        grid.append(0.5 * (folds[0] + folds[1]))
    return np.array(sorted(grid))


def max_root_count(params: SystemParams, n: int = 2001) -> int:
    return max(len(steady_states(params, dc)) for dc in detuning_sweep(params, n))


def is_bistable(params: SystemParams) -> bool:
    return max_root_count(params, n=201) >= 3


def critical_pump(params: SystemParams, rtol: float = 1e-4) -> float:
    """Smallest pump amplitude eta for which some delta_c has three steady states."""
    kappa = params.kappa

    def bistable(eta):
        return is_bistable(replace(params, eta=eta))

    lo, hi = 0.0, kappa
    while not bistable(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 100.0 * kappa:
            raise BistabilityNotFound("no bistability for eta up to 100*kappa")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if bistable(mid):
            hi = mid
        else:
            lo = mid
    return hi


def phase_space_field(X, p, params: SystemParams, delta_c):
    """Time derivatives (dX/dt, dp/dt) with the cavity field adiabatically eliminated.

    Works elementwise on arrays.
    """
    wm = params.omega_m
    Delta = effective_detuning(X, params, delta_c)
    n = adiabatic_photons(Delta, params.eta, params.kappa)
    dX = wm * 2.0 * p
    dp = 0.5 * (-wm * X - force_constant(params) / wm * n)
    return dX, dp


def lower_stable_state(params: SystemParams, delta_c: float) -> SteadyBranch:
    stable = [b for b in steady_states(params, delta_c) if b.stability == STABLE]
    if not stable:
        raise ValueError("no stable steady state at the requested detuning")
    return min(stable, key=lambda b: b.photons)


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    p: np.ndarray
    photons: np.ndarray
    delta_c: np.ndarray
    valid: bool = True
    violation_time: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Write ``t,X,P_over_hbar,photons,delta_c`` with delta_c in Hz."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "X", "P_over_hbar", "photons", "delta_c"])
            for row in zip(self.t, self.X, self.p, self.photons, self.delta_c / TWO_PI):
                w.writerow([repr(float(v)) for v in row])


def _rhs_adiabatic(params: SystemParams, scan: ScanProtocol):
    wm = params.omega_m
    Kw = force_constant(params) / wm
    g = params.g
    eta2 = params.eta**2
    kap2 = params.kappa**2
    base = -params.dispersive_shift

    def f(t, y):
        Delta = scan.delta_c(t) + base - g * y[0]
        n = eta2 / (kap2 + Delta * Delta)
        return (wm * 2.0 * y[1], -0.5 * (wm * y[0] + Kw * n))

    return f


def _rhs_dynamic(params: SystemParams, scan: ScanProtocol):
    wm = params.omega_m
    Kw = force_constant(params) / wm
    g = params.g
    eta = params.eta
    kappa = params.kappa
    base = -params.dispersive_shift

    def f(t, y):
        X, p, ar, ai = y
        Delta = scan.delta_c(t) + base - g * X
        n = ar * ar + ai * ai
        # i da/dt = -(Delta + i kappa) a + i eta
        return (wm * 2.0 * p, -0.5 * (wm * X + Kw * n),
                -Delta * ai - kappa * ar + eta, Delta * ar - kappa * ai)

    return f


def integrate_scan(
    initial: Optional[MechCavityState],
    params: SystemParams,
    scan: ScanProtocol,
    dt: float = 100e-9,
    sample_interval: float = 0.5e-6,
    cavity: str = "adiabatic",
    method: str = "rk8",
) -> Trajectory:
    """Fixed-step Runge-Kutta integration of the oscillator while delta_c is scanned.

    ``initial=None`` starts from the lower stable steady state at the scan
    start. With ``cavity="dynamic"`` the complex field amplitude is
    integrated as well; that mode needs ``dt`` well below 1/|Delta|.
    If the two-mode validity monitor exceeds 0.1 the trajectory is
    truncated there and flagged invalid.
    """
    if initial is None:
        b = lower_stable_state(params, scan.delta_c_start)
        initial = MechCavityState(b.X_ss, 0.0, adiabatic_field(b.delta, params.eta, params.kappa))
    N = params.N
    if initial.validity(N) >= VALIDITY_LIMIT:
        raise ValueError("initial state violates the two-mode validity bound")
    sample_every = max(1, int(round(sample_interval / dt)))
    n_steps = int(round(scan.duration / dt))

    def stop(t, y):
        return (0.25 * y[0] * y[0] + y[1] * y[1]) / N > VALIDITY_LIMIT

    if cavity == "adiabatic":
        f = _rhs_adiabatic(params, scan)
        y0 = [initial.X, initial.p]
    elif cavity == "dynamic":
        f = _rhs_dynamic(params, scan)
        a = complex(initial.alpha)
        y0 = [initial.X, initial.p, a.real, a.imag]
    else:
        raise ValueError(f"unknown cavity treatment {cavity!r}")
    t, Y, violation = rk.integrate(f, y0, initial.t, dt, n_steps, method, sample_every, stop)
    X, p = Y[:, 0], Y[:, 1]
    dc = scan.delta_c(t)
    if cavity == "adiabatic":
        photons = adiabatic_photons(effective_detuning(X, params, dc), params.eta, params.kappa)
    else:
        photons = Y[:, 2] ** 2 + Y[:, 3] ** 2
    return Trajectory(
        t=t, X=X, p=p, photons=photons, delta_c=dc,
        valid=violation is None, violation_time=violation,
        meta={"dt": dt, "sample_interval": sample_every * dt, "cavity": cavity, "method": method},
    )


def mechanical_cycles(traj: Trajectory, t_from: float = 0.0) -> np.ndarray:
    """Sample indices starting each oscillator cycle (upward zero crossings of P).

    Only crossings from the cycle containing ``t_from`` onwards are returned.
    """
    p = traj.p
    up = np.nonzero((p[:-1] < 0) & (p[1:] >= 0))[0] + 1
    i0 = np.searchsorted(traj.t, t_from)
    k = max(0, int(np.searchsorted(up, i0)) - 1)
    return up[k:]


def steady_sweep(params: SystemParams, delta_cs) -> List[tuple]:
    """Rows (delta_c, X_ss, photons, stability) for every branch at every detuning."""
    rows = []
    for dc in delta_cs:
        for b in steady_states(params, dc):
            rows.append((dc, b.X_ss, b.photons, b.stability))
    return rows


def write_steady_csv(rows, path) -> None:
    """CSV ``delta_c,X_ss,photons,stability`` with delta_c in Hz."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta_c", "X_ss", "photons", "stability"])
        for dc, X, n, s in rows:
            w.writerow([repr(float(dc / TWO_PI)), repr(float(X)), repr(float(n)), s])
