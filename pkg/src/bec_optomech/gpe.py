"""One-dimensional Gross-Pitaevskii model of the condensate in the dynamic
cavity lattice, with the cavity field adiabatically eliminated.

Internally everything runs in recoil units: x~ = k x, t~ = omega_rec t,
energies in hbar*omega_rec. In these units the kinetic operator is -d^2/dx~^2
and the wavefunction is normalized to the atom number, sum |psi|^2 dx~ = N.
"""

from __future__ import annotations

import csv
import functools
import math
import struct
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .units import HBAR, TWO_PI, ScanProtocol, SystemParams

MU_TARGET = TWO_PI * 2.4e3  # rad/s, chemical potential used to calibrate g1d


class GroundStateError(RuntimeError):
    pass


class EdgeDensityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid; ``extent`` must hold a whole number of half wavelengths."""

    extent: float = 13 * 780e-9
    points: int = 260
    wavelength: float = 780e-9

    def __post_init__(self):
        if self.points < 4 or self.points % 2:
            raise ValueError("grid points must be even and >= 4")
        halves = self.extent / (0.5 * self.wavelength)
        if abs(halves - round(halves)) > 1e-9 * halves:
            raise ValueError("grid extent must be an integer multiple of lambda/2")

    @classmethod
    def default(cls, wavelength: float = 780e-9, n_wavelengths: int = 13,
                points_per_half_wavelength: int = 10) -> "Grid1D":
        return cls(n_wavelengths * wavelength, 2 * n_wavelengths * points_per_half_wavelength,
                   wavelength)

    @property
    def dx(self) -> float:
        return self.extent / self.points

    @property
    def length(self) -> float:
        """Extent in recoil units (1/k)."""
        return TWO_PI * self.extent / self.wavelength

    @property
    def xr(self) -> np.ndarray:
        """Positions in units of 1/k, centred on an antinode at x = 0."""
        n = self.points
        return (np.arange(n) - n // 2) * (self.length / n)

    @property
    def dxr(self) -> float:
        return self.length / self.points

    @property
    def kr(self) -> np.ndarray:
        """Angular wavenumbers in units of k."""
        return TWO_PI * np.fft.fftfreq(self.points, self.dxr)

    def refined(self, factor: int = 2) -> "Grid1D":
        return replace(self, points=self.points * factor)


@dataclass(frozen=True)
class LossModel:
    """Atom loss as an absolute rate (atoms/s), applied uniformly in space."""

    background_rate: float = 45e3  # atoms/s
    enhanced_rate: float = 1.5e6  # atoms/s, while the cavity is lit
    trigger_photons: float = 0.5
    trigger_window: float = 10e-6  # s, trailing average of |alpha|^2

    def __post_init__(self):
        if self.background_rate < 0 or self.enhanced_rate < 0:
            raise ValueError("loss rates must be >= 0")


NO_LOSS = LossModel(0.0, 0.0)


@dataclass
class Wavefunction1D:
    psi: np.ndarray  # recoil units, sum |psi|^2 dxr = N
    grid: Grid1D

    @property
    def atom_number(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dxr)

    @property
    def psi_si(self) -> np.ndarray:
        """Amplitude in sqrt(atoms/m)."""
        return self.psi * math.sqrt(TWO_PI / self.grid.wavelength)

    def save(self, path) -> None:
        """Little-endian uint64 length followed by (re, im) float64 pairs, SI units."""
        data = np.empty(2 * len(self.psi), dtype="<f8")
        psi = self.psi_si
        data[0::2] = psi.real
        data[1::2] = psi.imag
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", len(self.psi)))
            fh.write(data.tobytes())

    @classmethod
    def load(cls, path, grid: Grid1D) -> "Wavefunction1D":
        with open(path, "rb") as fh:
            (n,) = struct.unpack("<Q", fh.read(8))
            data = np.frombuffer(fh.read(16 * n), dtype="<f8")
        if n != grid.points or len(data) != 2 * n:
            raise ValueError(f"checkpoint holds {n} points, grid has {grid.points}")
        psi = (data[0::2] + 1j * data[1::2]) / math.sqrt(TWO_PI / grid.wavelength)
        return cls(psi, grid)


def overlap(psi, grid: Grid1D) -> float:
    """Mode overlap u = sum |psi|^2 cos^2(k x) dx (periodic trapezoid rule)."""
    psi = psi.psi if isinstance(psi, Wavefunction1D) else psi
    return float(np.sum(np.abs(psi) ** 2 * np.cos(grid.xr) ** 2) * grid.dxr)


def two_mode_state(c0: complex, c2: complex, grid: Grid1D) -> Wavefunction1D:
    """psi = (c0 + c2 sqrt(2) cos(2kx)) / sqrt(L), normalized to |c0|^2 + |c2|^2."""
    psi = (c0 + c2 * math.sqrt(2.0) * np.cos(2.0 * grid.xr)) / math.sqrt(grid.length)
    return Wavefunction1D(psi.astype(complex), grid)


class _Model:
    """Dimensionless coefficients of the GP Hamiltonian on a grid."""

    def __init__(self, params: SystemParams, grid: Grid1D, g1d: float, trap: bool = True):
        wr = params.omega_rec
        self.params = params
        self.grid = grid
        self.x = grid.xr
        self.dx = grid.dxr
        self.k2 = grid.kr**2
        self.cos2 = np.cos(self.x) ** 2
        wx = params.trap[0] if trap else 0.0
        self.vext = (wx / (2.0 * wr)) ** 2 * self.x**2
        self.lattice = params.U0 / wr  # lattice depth per photon
        self.g = g1d * params.k / (HBAR * wr)

    def overlap(self, psi):
        return float(np.sum((psi.real**2 + psi.imag**2) * self.cos2) * self.dx)

    def photons(self, u, delta_c):
        p = self.params
        Delta = delta_c - p.U0 * u
        return p.eta**2 / (p.kappa**2 + Delta * Delta)

    def potential(self, psi, n):
        return self.vext + self.lattice * n * self.cos2 + self.g * (psi.real**2 + psi.imag**2)

    def energy(self, psi, n):
        """Energy functional and chemical potential, both per hbar*omega_rec."""
        dens = psi.real**2 + psi.imag**2
        phik = np.fft.fft(psi)
        ekin = float(np.sum(self.k2 * np.abs(phik) ** 2) / len(psi) * self.dx)
        epot = float(np.sum((self.vext + self.lattice * n * self.cos2) * dens) * self.dx)
        eint = float(np.sum(self.g * dens**2) * self.dx)
        N = float(np.sum(dens) * self.dx)
        return ekin + epot + 0.5 * eint, (ekin + epot + eint) / N


@dataclass
class GroundState:
    wavefunction: Wavefunction1D
    energy: float  # J, total
    mu: float  # J
    photons: float
    energies: np.ndarray = field(repr=False, default=None)  # per-step history, J

    @property
    def psi(self):
        return self.wavefunction.psi


def _initial_guess(model: _Model, N: float) -> np.ndarray:
    x = model.x
    wx = model.params.trap[0]
    if wx > 0:
        width = max(math.sqrt(2.0 * model.params.omega_rec / wx), 0.5)
        if model.g > 0:
            # Thomas-Fermi half width
            mu = (3.0 * model.g * N * (wx / (2 * model.params.omega_rec)) / 4.0) ** (2.0 / 3.0)
            width = max(width, math.sqrt(mu) * 2 * model.params.omega_rec / wx / 2)
        psi = np.exp(-0.5 * (x / width) ** 2).astype(complex)
    else:
        psi = np.ones_like(x, dtype=complex)
    return psi * math.sqrt(N / (np.sum(np.abs(psi) ** 2) * model.dx))


def _imaginary_time(model: _Model, psi, N, n, dtau, tol, max_steps, history):
    half = np.exp(-0.5 * dtau * model.k2)
    e_old, _ = model.energy(psi, n)
    for i in range(max_steps):
        psi = np.fft.ifft(half * np.fft.fft(psi))
        psi = psi * np.exp(-dtau * model.potential(psi, n))
        psi = np.fft.ifft(half * np.fft.fft(psi))
        psi *= math.sqrt(N / (np.sum(np.abs(psi) ** 2) * model.dx))
        e_new, mu = model.energy(psi, n)
        history.append(e_new)
        if abs(e_new - e_old) <= tol * abs(e_new):
            return psi, e_new, mu
        e_old = e_new
    raise GroundStateError(
        f"imaginary-time propagation did not converge in {max_steps} steps "
        f"(last relative energy change {abs(e_new - e_old) / abs(e_new):.3g})")


def ground_state(params: SystemParams, grid: Optional[Grid1D] = None, delta_c: Optional[float] = None,
                 tol: float = 1e-10, dtau: float = 0.05, max_steps: int = 400_000,
                 g1d: Optional[float] = None, trap: bool = True, photon_tol: float = 1e-8,
                 max_outer: int = 100, psi_init=None) -> GroundState:
    """Imaginary-time ground state in the self-consistent cavity lattice.

    ``delta_c`` is the pump-cavity detuning; it should lie below the
    resonance where a low-photon state exists. With ``delta_c=None`` the
    cavity is left empty. ``g1d=None`` uses the parameter record's value, or
    the calibrated one when that is unset as well. ``psi_init`` replaces the
    default Gaussian or Thomas-Fermi-width starting guess.
    """
    grid = grid or Grid1D.default(params.wavelength)
    if g1d is None:
        g1d = params.g1d if params.g1d is not None else calibrated_g1d(params, grid)
    model = _Model(params, grid, g1d, trap)
    N = params.N
    if psi_init is None:
        psi = _initial_guess(model, N)
    else:
        psi = np.array(psi_init, dtype=complex)
        psi *= math.sqrt(N / (np.sum(np.abs(psi) ** 2) * model.dx))
    history: list = []
    n = 0.0 if delta_c is None else model.photons(model.overlap(psi), delta_c)
    for _ in range(max_outer):
        psi, e, mu = _imaginary_time(model, psi, N, n, dtau, tol, max_steps, history)
        if delta_c is None:
            break
        n_new = model.photons(model.overlap(psi), delta_c)
        if abs(n_new - n) < photon_tol:
            n = n_new
            break
        n = n_new
    else:
        raise GroundStateError(f"photon self-consistency failed (last |dn| = {abs(n_new - n):.3g})")
    dens = np.abs(psi) ** 2
    edge = max(dens[0], dens[-1])
    if edge > 1e-8 * dens.max():
        warnings.warn(f"edge density {edge / dens.max():.2g} of peak; enlarge the grid",
                      EdgeDensityWarning, stacklevel=2)
    E = HBAR * params.omega_rec
    return GroundState(Wavefunction1D(psi, grid), e * E, mu * E, n, np.array(history) * E)


def thomas_fermi_g1d(params: SystemParams, mu: float = MU_TARGET) -> float:
    """g1d giving chemical potential ``mu`` (rad/s) in the 1D Thomas-Fermi limit."""
    wx = params.trap[0]
    R = math.sqrt(2.0 * HBAR * mu / (params.mass * wx * wx))
    return 4.0 * HBAR * mu * R / (3.0 * params.N)


@functools.lru_cache(maxsize=32)
def _calibrate(wavelength, mass, N, wx, grid, mu_target):
    params = SystemParams(wavelength=wavelength, mass=mass, N=N, trap=(wx, wx, wx), eta=0.0)
    g_tf = thomas_fermi_g1d(params, mu_target)
    target = HBAR * mu_target

    def resid(scale):
        gs = ground_state(params, grid, None, tol=1e-12, g1d=g_tf * scale)
        return gs.mu / target - 1.0

    scale = brentq(resid, 0.7, 1.3, xtol=1e-9, rtol=1e-9)
    return g_tf * scale


def calibrated_g1d(params: SystemParams, grid: Optional[Grid1D] = None, mu: float = MU_TARGET) -> float:
    """g1d for which the numerical 1D ground state has chemical potential ``mu``."""
    grid = grid or Grid1D.default(params.wavelength)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeDensityWarning)
        return _calibrate(params.wavelength, params.mass, params.N, params.trap[0], grid, mu)


@dataclass
class GPETrajectory:
    t: np.ndarray
    overlap: np.ndarray
    photons: np.ndarray
    atom_number: np.ndarray
    delta_c: np.ndarray
    enhanced: np.ndarray = field(repr=False, default=None)  # per-step trigger state
    dt: float = 100e-9
    final: Optional[Wavefunction1D] = field(repr=False, default=None)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "overlap", "photons", "atom_number"])
            for row in zip(self.t, self.overlap, self.photons, self.atom_number):
                w.writerow([repr(float(v)) for v in row])


def propagate_scan(psi0: Wavefunction1D, params: SystemParams, scan: ScanProtocol,
                   loss: LossModel = NO_LOSS, dt: float = 100e-9, sample_interval: float = 0.5e-6,
                   g1d: Optional[float] = None, trap: bool = True) -> GPETrajectory:
    """Real-time Strang-split propagation while delta_c is scanned.

    Each step is: half kinetic, lattice + trap + mean-field phase with the
    adiabatic field evaluated at the mid-step overlap, half kinetic, then a
    uniform loss factor. The enhanced loss rate applies whenever the
    trailing-window mean photon number exceeds ``loss.trigger_photons``.
    """
    grid = psi0.grid
    if g1d is None:
        g1d = params.g1d if params.g1d is not None else calibrated_g1d(params, grid)
    model = _Model(params, grid, g1d, trap)
    wr = params.omega_rec
    h = dt * wr
    half = np.exp(-0.5j * h * model.k2)
    psi = np.array(psi0.psi, dtype=complex)
    n_steps = int(round(scan.duration / dt))
    every = max(1, int(round(sample_interval / dt)))
    window = max(1, int(round(loss.trigger_window / dt)))
    recent: deque = deque(maxlen=window)
    running = 0.0

    n_samples = n_steps // every + 1
    ts = np.empty(n_samples)
    us = np.empty(n_samples)
    ns = np.empty(n_samples)
    Ns = np.empty(n_samples)
    enhanced = np.zeros(n_steps, dtype=bool)
    u = model.overlap(psi)
    ts[0], us[0], ns[0], Ns[0] = 0.0, u, model.photons(u, scan.delta_c(0.0)), psi0.atom_number
    j = 1
    for i in range(n_steps):
        t_mid = (i + 0.5) * dt
        psi = np.fft.ifft(half * np.fft.fft(psi))
        u = model.overlap(psi)
        dc = scan.delta_c(t_mid)
        n = model.photons(u, dc)
        if not math.isfinite(n) or not math.isfinite(u):
            raise FloatingPointError(
                f"non-finite field at t={t_mid:.6g}s (Delta={dc - params.U0 * u:.6g}, u={u:.6g})")
        psi = psi * np.exp(-1j * h * model.potential(psi, n))
        psi = np.fft.ifft(half * np.fft.fft(psi))

        if len(recent) == window:
            running -= recent[0]
        recent.append(n)
        running += n
        rate = loss.background_rate
        if loss.enhanced_rate > 0 and running / len(recent) > loss.trigger_photons:
            rate += loss.enhanced_rate
            enhanced[i] = True
        if rate > 0:
            N_now = float(np.sum(psi.real**2 + psi.imag**2) * model.dx)
            psi *= math.sqrt(max(0.0, 1.0 - rate * dt / N_now))

        if (i + 1) % every == 0:
            t = (i + 1) * dt
            u = model.overlap(psi)
            ts[j] = t
            us[j] = u
            ns[j] = model.photons(u, scan.delta_c(t))
            Ns[j] = float(np.sum(psi.real**2 + psi.imag**2) * model.dx)
            j += 1
    return GPETrajectory(ts[:j], us[:j], ns[:j], Ns[:j], scan.delta_c(ts[:j]), enhanced, dt,
                         Wavefunction1D(psi, grid))


def analytic_atom_number(N0: float, enhanced: np.ndarray, loss: LossModel, dt: float) -> np.ndarray:
    """Piecewise-linear atom number after each step, given the trigger record."""
    rates = loss.background_rate + loss.enhanced_rate * enhanced
    return N0 - np.cumsum(rates) * dt
