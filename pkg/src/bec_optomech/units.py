"""Physical constants, system parameters and derived opto-mechanical quantities.

All frequencies are stored as angular frequencies (rad/s) in SI units. The
:class:`Scales` helper exposes the recoil-unit view (time in 1/omega_rec,
length in 1/k, energy in hbar*omega_rec) used by the grid integrators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Tuple

TWO_PI = 2.0 * math.pi

# CODATA 2018, 10 significant digits
HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m/s
K_B = 1.380649e-23  # J/K
M_RB87 = 1.443160648e-25  # kg


class ParameterError(ValueError):
    """Raised when a parameter record fails validation."""


def light_shift(g0: float, delta_a: float) -> float:
    """Light shift per intracavity photon, ``g0**2 / delta_a`` (rad/s)."""
    if delta_a == 0:
        raise ParameterError("resonant pump unsupported (delta_a = 0)")
    return g0 * g0 / delta_a


def recoil_frequency(wavelength: float, mass: float) -> float:
    if wavelength <= 0 or mass <= 0:
        raise ParameterError("wavelength and mass must be positive")
    k = TWO_PI / wavelength
    return HBAR * k * k / (2.0 * mass)


def optomech_coupling(U0: float, N: float) -> float:
    """Collectively enhanced coupling ``(U0/2) sqrt(N/2)``."""
    if N < 0:
        raise ParameterError("atom number must be non-negative")
    return 0.5 * U0 * math.sqrt(N / 2.0)


def oscillator_length(g: float, cavity_length: float, omega_c: float) -> float:
    return g * cavity_length / omega_c


def effective_mass(g: float, cavity_length: float, omega_c: float, omega_m: float) -> float:
    """Mass of the equivalent moving mirror.

    The radiation-pressure coupling of a mirror oscillator is
    ``g = omega_c * a_ho / L`` with ``a_ho = sqrt(hbar / (2 m_eff omega_m))``.
    """
    if min(g, cavity_length, omega_c, omega_m) <= 0:
        raise ParameterError("effective_mass needs positive inputs")
    a_ho = oscillator_length(g, cavity_length, omega_c)
    return HBAR / (2.0 * a_ho * a_ho * omega_m)


@dataclass(frozen=True)
class SystemParams:
    """Validated physical parameters of the BEC-cavity system.

    Derived quantities (``U0``, ``omega_rec``, ``g``...) are properties and
    are recomputed on every access.
    """

    g0: float = TWO_PI * 10.9e6
    kappa: float = TWO_PI * 1.3e6
    gamma: float = TWO_PI * 3.0e6
    wavelength: float = 780e-9
    mass: float = M_RB87
    N: float = 1.2e5
    delta_a: float = TWO_PI * 32e9
    eta: float = TWO_PI * 1.3e6 * math.sqrt(7.3)
    trap: Tuple[float, float, float] = (TWO_PI * 222.0, TWO_PI * 37.0, TWO_PI * 210.0)
    g1d: Optional[float] = None  # J m; None -> calibrate to the target chemical potential
    cavity_length: float = 178e-6

    def __post_init__(self):
        if not self.kappa > 0:
            raise ParameterError("kappa must be > 0")
        if not self.g0 >= 0:
            raise ParameterError("g0 must be >= 0")
        if not self.N >= 1:
            raise ParameterError("atom number N must be >= 1")
        if not self.wavelength > 0:
            raise ParameterError("wavelength must be > 0")
        if not self.mass > 0:
            raise ParameterError("mass must be > 0")
        if self.delta_a == 0:
            raise ParameterError("resonant pump unsupported (delta_a = 0)")
        if self.eta < 0:
            raise ParameterError("eta must be >= 0")
        if len(self.trap) != 3 or any(w < 0 for w in self.trap):
            raise ParameterError("trap must be three non-negative angular frequencies")
        if self.g1d is not None and self.g1d < 0:
            raise ParameterError("g1d must be >= 0")
        if abs(self.delta_a) < 1e4 * self.gamma:
            warnings.warn(
                f"|delta_a| = {abs(self.delta_a) / TWO_PI:.3g} Hz is below 1e4*gamma; "
                "spontaneous emission is not negligible",
                stacklevel=3,
            )

    @property
    def k(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def U0(self) -> float:
        return light_shift(self.g0, self.delta_a)

    @property
    def omega_rec(self) -> float:
        return recoil_frequency(self.wavelength, self.mass)

    @property
    def omega_m(self) -> float:
        """Bare mechanical frequency 4*omega_rec."""
        return 4.0 * self.omega_rec

    @property
    def g(self) -> float:
        return optomech_coupling(self.U0, self.N)

    @property
    def dispersive_shift(self) -> float:
        """Cavity resonance shift U0*N/2 of a homogeneous condensate."""
        return 0.5 * self.U0 * self.N

    @property
    def pump_photons(self) -> float:
        """Resonant mean photon number eta**2/kappa**2."""
        return (self.eta / self.kappa) ** 2

    @property
    def omega_c(self) -> float:
        return TWO_PI * C_LIGHT / self.wavelength

    @property
    def m_eff(self) -> float:
        return effective_mass(self.g, self.cavity_length, self.omega_c, self.omega_m)

    def shifted_detuning(self, delta_c: float) -> float:
        return delta_c - self.dispersive_shift

    def with_photons(self, photons: float) -> "SystemParams":
        """Copy with eta set so that eta**2/kappa**2 == photons."""
        return replace(self, eta=self.kappa * math.sqrt(photons))

    @property
    def scales(self) -> "Scales":
        return Scales.from_params(self)


def sigma_plus(params: Optional[SystemParams] = None) -> SystemParams:
    """sigma+ preset: g0 scaled by sqrt(2) so that g/kappa doubles."""
    params = params or SystemParams()
    return replace(params, g0=params.g0 * math.sqrt(2.0))


PRESETS = {
    "sigma_minus": SystemParams,
    "sigma_plus": lambda: sigma_plus(SystemParams()),
}


@dataclass(frozen=True)
class Scales:
    """Recoil units: length 1/k, time 1/omega_rec, energy hbar*omega_rec."""

    length: float
    time: float
    energy: float

    @classmethod
    def from_params(cls, params: SystemParams) -> "Scales":
        w = params.omega_rec
        return cls(length=1.0 / params.k, time=1.0 / w, energy=HBAR * w)


@dataclass(frozen=True)
class ScanProtocol:
    """Linear detuning scan delta_c(t) = start + direction*rate*t."""

    delta_c_start: float
    rate: float = TWO_PI * 2.9e9  # rad/s per s (2.9 MHz/ms)
    duration: float = 2.5e-3
    direction: int = 1

    def __post_init__(self):
        if not self.duration > 0:
            raise ParameterError("scan duration must be > 0")
        if self.rate < 0:
            raise ParameterError("scan rate must be >= 0; use direction for sign")
        if self.direction not in (1, -1):
            raise ParameterError("direction must be +1 or -1")

    def delta_c(self, t):
        return self.delta_c_start + self.direction * self.rate * t


def default_scan(params: SystemParams, offset: float = -TWO_PI * 15e6, **kw) -> ScanProtocol:
    """Scan starting ``offset`` away from the dispersively shifted resonance."""
    return ScanProtocol(delta_c_start=params.dispersive_shift + offset, **kw)
