"""Flat ``key = value`` run configuration.

Frequencies are entered in Hz and converted to angular frequencies exactly
once, when the physics records are built. Lengths are in metres, times in
seconds, masses in kg. Any key can be overridden from the environment as
``BECOM_<KEY>`` (upper case).
"""

from __future__ import annotations

import difflib
import math
import os
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Optional, Tuple

from .detector import DetectorModel
from .gpe import Grid1D, LossModel
from .thermal import ThermalInput
from .units import M_RB87, TWO_PI, ParameterError, ScanProtocol, SystemParams

ENV_PREFIX = "BECOM_"


class ConfigError(ParameterError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # system
    g0: float = 10.9e6  # Hz
    kappa: float = 1.3e6  # Hz
    gamma: float = 3.0e6  # Hz
    delta_a: float = 32e9  # Hz
    wavelength: float = 780e-9
    mass: float = M_RB87
    N: float = 1.2e5
    pump_photons: float = 7.3  # eta^2/kappa^2 for steady-state and two-mode runs
    trap_x: float = 222.0  # Hz
    trap_y: float = 37.0
    trap_z: float = 210.0
    g1d: str = "auto"  # J m, or "auto" to calibrate on the chemical potential
    cavity_length: float = 178e-6
    polarization: str = "sigma_minus"
    # scan
    scan_offset: float = -15e6  # Hz, start relative to the shifted resonance
    scan_rate: float = 2.9e9  # Hz/s
    scan_duration: float = 2.5e-3
    scan_direction: int = 1
    dt: float = 100e-9
    sample_interval: float = 0.5e-6
    cavity: str = "adiabatic"
    method: str = "rk8"
    # steady-state sweep
    steady_range: str = "auto"  # "lo, hi" in Hz, or auto to cover the tilted resonance
    steady_points: int = 2001
    steady_photons: Tuple[float, ...] = (0.02, 0.07, 1.0, 7.3)
    # 1D mean-field runs
    gpe_photons: float = 3.6
    gpe_duration: float = 5.0e-3
    grid_wavelengths: int = 13
    grid_points: int = 260
    gs_tol: float = 1e-10
    loss: bool = True
    loss_background: float = 45e3  # atoms/s
    loss_enhanced: float = 1.5e6  # atoms/s
    loss_trigger_photons: float = 0.5
    loss_trigger_window: float = 10e-6
    # detector
    detector: bool = True
    detector_rate: float = 0.8e6  # counts/s per photon
    dead_time: float = 50e-9
    detector_bin: float = 2e-6
    # analysis
    smooth_window: float = 10e-6
    prominence: float = 0.25  # fraction of the trace maximum
    min_separation: float = 10e-6
    freq_bin: float = 50e-6
    # thermal
    condensate_fraction: float = 0.9
    thermal_mode: str = "1d"
    thermal_normalize: bool = False
    tf_radius: float = 3.3e-6

    def __post_init__(self):
        if self.polarization not in ("sigma_minus", "sigma_plus"):
            raise ConfigError("polarization must be sigma_minus or sigma_plus")
        if self.cavity not in ("adiabatic", "dynamic"):
            raise ConfigError("cavity must be adiabatic or dynamic")
        if self.thermal_mode not in ("1d", "3d"):
            raise ConfigError("thermal_mode must be 1d or 3d")
        if self.pump_photons < 0 or self.gpe_photons < 0:
            raise ConfigError("photon numbers must be >= 0")
        if self.steady_range != "auto":
            self.steady_bounds()
        if self.steady_points < 2:
            raise ConfigError("steady_points must be >= 2")
        if self.dt <= 0 or self.sample_interval < self.dt:
            raise ConfigError("need dt > 0 and sample_interval >= dt")
        if self.g1d != "auto":
            try:
                float(self.g1d)
            except ValueError:
                raise ConfigError("g1d must be a number (J m) or 'auto'") from None

    def steady_bounds(self) -> Optional[Tuple[float, float]]:
        """(lo, hi) in rad/s, or None for the automatic range."""
        if self.steady_range == "auto":
            return None
        try:
            lo, hi = (float(v) for v in self.steady_range.split(","))
        except ValueError:
            raise ConfigError("steady_range must be 'auto' or 'lo, hi' in Hz") from None
        if not hi > lo:
            raise ConfigError("steady_range needs hi > lo")
        return TWO_PI * lo, TWO_PI * hi

    # physics records
    def system_params(self, photons: Optional[float] = None) -> SystemParams:
        g0 = TWO_PI * self.g0
        if self.polarization == "sigma_plus":
            g0 *= math.sqrt(2.0)
        kappa = TWO_PI * self.kappa
        photons = self.pump_photons if photons is None else photons
        return SystemParams(
            g0=g0, kappa=kappa, gamma=TWO_PI * self.gamma, wavelength=self.wavelength,
            mass=self.mass, N=self.N, delta_a=TWO_PI * self.delta_a,
            eta=kappa * math.sqrt(photons),
            trap=(TWO_PI * self.trap_x, TWO_PI * self.trap_y, TWO_PI * self.trap_z),
            g1d=None if self.g1d == "auto" else float(self.g1d),
            cavity_length=self.cavity_length,
        )

    def scan(self, params: SystemParams, duration: Optional[float] = None) -> ScanProtocol:
        return ScanProtocol(
            delta_c_start=params.dispersive_shift + TWO_PI * self.scan_offset,
            rate=TWO_PI * self.scan_rate,
            duration=self.scan_duration if duration is None else duration,
            direction=self.scan_direction,
        )

    def grid(self) -> Grid1D:
        return Grid1D(self.grid_wavelengths * self.wavelength, self.grid_points, self.wavelength)

    def loss_model(self) -> LossModel:
        if not self.loss:
            return LossModel(0.0, 0.0, self.loss_trigger_photons, self.loss_trigger_window)
        return LossModel(self.loss_background, self.loss_enhanced,
                         self.loss_trigger_photons, self.loss_trigger_window)

    def detector_model(self, seed: int = 0) -> DetectorModel:
        return DetectorModel(self.detector_rate, self.dead_time, self.detector_bin, seed)

    def thermal_input(self) -> ThermalInput:
        return ThermalInput(
            N=self.N, condensate_fraction=self.condensate_fraction,
            trap=(TWO_PI * self.trap_x, TWO_PI * self.trap_y, TWO_PI * self.trap_z),
            wavelength=self.wavelength, mass=self.mass, mode=self.thermal_mode,
            normalize=self.thermal_normalize, tf_radius=self.tf_radius,
        )


FIELDS = {f.name: f for f in fields(RunConfig)}
_DEFAULTS = RunConfig()


def _parse_value(name: str, text: str):
    default = getattr(_DEFAULTS, name)
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {name} = {text!r} as {type(default).__name__}") from None
    return text


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def unknown_key_error(key: str) -> ConfigError:
    near = difflib.get_close_matches(key, FIELDS, n=3)
    hint = f"; did you mean {', '.join(near)}?" if near else ""
    return ConfigError(f"unknown config key {key!r}{hint}")


def parse_text(text: str) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise unknown_key_error(key)
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, val)
    return values


def env_overrides(environ=None) -> Dict[str, object]:
    environ = os.environ if environ is None else environ
    by_lower = {k.lower(): k for k in FIELDS}
    out = {}
    for name, val in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in by_lower:
            raise unknown_key_error(key)
        key = by_lower[key]
        out[key] = _parse_value(key, val)
    return out


def load(path=None, environ=None, overrides: Optional[dict] = None) -> Tuple[RunConfig, List[str]]:
    """Build a config from file, environment and explicit overrides (in that order).

    Returns the config and the names of fields left at their defaults.
    """
    values: Dict[str, object] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_text(fh.read()))
    values.update(env_overrides(environ))
    for key, val in (overrides or {}).items():
        if key not in FIELDS:
            raise unknown_key_error(key)
        values[key] = _parse_value(key, val) if isinstance(val, str) else val
    cfg = RunConfig(**values)
    defaulted = [name for name in FIELDS if name not in values]
    return cfg, defaulted


def loads(text: str) -> RunConfig:
    return RunConfig(**parse_text(text))


def dumps(cfg: RunConfig) -> str:
    return "".join(f"{name} = {_format_value(getattr(cfg, name))}\n" for name in FIELDS)


def with_values(cfg: RunConfig, **values) -> RunConfig:
    for key in values:
        if key not in FIELDS:
            raise unknown_key_error(key)
    return replace(cfg, **values)
