"""Thermal occupation of the mechanical mode from overlap-operator fluctuations.

Thermal atoms occupy harmonic-oscillator levels along the cavity axis; their
interference with the condensate and among themselves broadens the overlap
operator u = int cos^2(kx) Psi^dag Psi dx. Comparing that variance with the
zero-point value N/8 gives the number of thermal excitations n_T.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_hermite, roots_legendre

from .units import HBAR, K_B, M_RB87, TWO_PI

HARD_CAP = 10_000
OCCUPANCY_CUTOFF = 1e-6
DEFAULT_TRAP = (TWO_PI * 222.0, TWO_PI * 37.0, TWO_PI * 210.0)


class CutoffError(RuntimeError):
    pass


class QuadratureMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class ThermalInput:
    N: float = 1.2e5
    condensate_fraction: float = 0.9
    trap: Tuple[float, float, float] = DEFAULT_TRAP
    wavelength: float = 780e-9
    mass: float = M_RB87
    mode: str = "1d"  # "1d" or "3d" occupations, see ``level_occupations``
    normalize: bool = False  # rescale occupations so they sum to N_T
    i_max: int = 64  # starting cutoff; raised automatically
    tf_radius: float = 3.3e-6

    def __post_init__(self):
        if not 0 < self.condensate_fraction <= 1:
            raise ValueError("condensate fraction must lie in (0, 1]")
        if self.mode not in ("1d", "3d"):
            raise ValueError("mode must be '1d' or '3d'")
        if self.i_max < 1:
            raise ValueError("i_max must be >= 1")


@dataclass
class ThermalEstimate:
    T: float
    Tc: float
    delta_u_sq: float
    interference_term: float
    autocorr_term: float
    n_T: float
    i_max_used: int

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def critical_temperature(N: float, trap) -> float:
    """Ideal-gas BEC transition temperature in a 3D harmonic trap."""
    if N < 100:
        raise ValueError("critical_temperature needs N >= 100")
    wbar = float(np.prod(trap)) ** (1.0 / 3.0)
    return 0.94 * HBAR * wbar * N ** (1.0 / 3.0) / K_B


def temperature_for_fraction(fraction: float, Tc: float) -> float:
    """Invert N0/N = 1 - (T/Tc)^3."""
    return Tc * (1.0 - fraction) ** (1.0 / 3.0)


def zero_point_reference(N: float) -> float:
    """Overlap variance of the oscillator ground state, N/8."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return N / 8.0


def hermite_functions(nmax: int, xi) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized Hermite functions psi_0..psi_nmax at ``xi`` (units of the oscillator length).

    Returns ``(psi, log_abs_last)``: the (nmax+1, len(xi)) table, which
    underflows to zero far outside the classical region, and log|psi_nmax|
    which stays finite there.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((nmax + 1, len(xi)))
    log_scale = -0.5 * xi * xi - 0.25 * math.log(math.pi)
    prev = np.zeros_like(xi)
    cur = np.ones_like(xi)
    out[0] = np.exp(log_scale)
    for n in range(nmax):
        nxt = math.sqrt(2.0 / (n + 1)) * xi * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if np.any(big):
            prev[big] *= 1e-100
            cur[big] *= 1e-100
            log_scale[big] += 100.0 * math.log(10.0)
        with np.errstate(under="ignore"):
            out[n + 1] = cur * np.exp(log_scale)
    with np.errstate(divide="ignore"):
        log_last = np.log(np.abs(cur)) + log_scale
    return out, log_last


def _gauss_hermite(n_nodes: int, nmax: int):
    """Nodes, weights for int f(xi) dxi (weight function divided out), and psi table."""
    xi, _ = roots_hermite(n_nodes)
    _, log_prev = hermite_functions(n_nodes - 1, xi)
    # w_k exp(xi_k^2) = 1 / (n psi_{n-1}(xi_k)^2)
    weights = np.exp(-math.log(n_nodes) - 2.0 * log_prev)
    psi, _ = hermite_functions(nmax, xi)
    return xi, weights, psi


def oscillator_length(mass: float, omega: float) -> float:
    return math.sqrt(HBAR / (mass * omega))


def _closed_form(i_max: int, beta: float) -> np.ndarray:
    """<m|cos(q x)|n> from the Laguerre expression, beta = q a / sqrt(2)."""
    out = np.zeros((i_max + 1, i_max + 1))
    b2 = beta * beta
    for n in range(i_max + 1):
        for m in range(n, i_max + 1, 2):
            d = m - n
            logpre = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) - 0.5 * b2
            logpre += d * math.log(beta) if d else 0.0
            val = (-1) ** (d // 2) * math.exp(logpre) * eval_genlaguerre(n, d, b2)
            out[m, n] = out[n, m] = val
    return out


def matrix_elements(i_max: int, k: float, mass: float, omega_x: float,
                    validate: bool = True, n_nodes: int = None) -> np.ndarray:
    """Table M_ij = 0.5 <phi_i|cos(2kx)|phi_j> over harmonic-oscillator states.

    Computed by Gauss-Hermite quadrature; with ``validate`` the table is
    checked against the closed Laguerre form wherever that form is
    numerically reliable.
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    a = oscillator_length(mass, omega_x)
    qa = 2.0 * k * a
    # the nodes must resolve both the highest level and the cos(qa xi) factor
    n_nodes = n_nodes or 4 * i_max + 200 + int(math.ceil(qa * qa))
    xi, w, psi = _gauss_hermite(n_nodes, i_max)
    M = 0.5 * (psi * (w * np.cos(qa * xi))) @ psi.T
    M = 0.5 * (M + M.T)
    parity = (np.add.outer(np.arange(i_max + 1), np.arange(i_max + 1)) % 2).astype(bool)
    M[parity] = 0.0
    if validate:
        ref = 0.5 * _closed_form(i_max, qa / math.sqrt(2.0))
        ok = np.isfinite(ref)
        err = np.max(np.abs(M[ok] - ref[ok])) if np.any(ok) else 0.0
        if err > 1e-8:
            raise QuadratureMismatch(f"quadrature vs closed form mismatch {err:.3g}")
    return M


def condensate_elements(i_max: int, k: float, mass: float, omega_x: float, R: float,
                        n_theta: int = 4096) -> np.ndarray:
    """0.5 <phi_TF|cos(2kx)|phi_i> for a 1D Thomas-Fermi profile of radius R.

    Uses x = R sin(theta), which removes the square-root edge of the profile.
    """
    a = oscillator_length(mass, omega_x)
    th, wt = roots_legendre(n_theta)
    th = 0.5 * math.pi * th
    wt = 0.5 * math.pi * wt
    x = R * np.sin(th)
    psi, _ = hermite_functions(i_max, x / a)
    psi /= math.sqrt(a)  # per sqrt(metre)
    tf = math.sqrt(3.0 / (4.0 * R)) * np.cos(th)
    integrand = tf * np.cos(2.0 * k * x) * R * np.cos(th) * wt
    return 0.5 * psi @ integrand


def level_occupations(inp: ThermalInput, T: float, i_max: int) -> np.ndarray:
    """Mean occupations of x-levels 0..i_max at zero chemical potential.

    "1d": Bose occupations 1/(exp(i hbar w_x / kT) - 1) of the axial levels
    i >= 1 (transverse ground state).
    "3d": 3D Bose occupations summed over transverse levels (the global
    ground state excluded).
    With ``normalize`` the occupations are rescaled to sum to N_T = N (1 - fraction).
    """
    NT = inp.N * (1.0 - inp.condensate_fraction)
    occ = np.zeros(i_max + 1)
    if NT == 0 or T == 0:
        return occ
    bx, by, bz = (HBAR * w / (K_B * T) for w in inp.trap)
    i = np.arange(i_max + 1)
    if inp.mode == "1d":
        occ[1:] = 1.0 / np.expm1(bx * i[1:])
    else:
        L = int(math.ceil(40.0 / min(bx, by, bz))) + 1
        l = np.arange(1, L + 1)
        transverse = 1.0 / (-np.expm1(-l * by) * -np.expm1(-l * bz))
        with np.errstate(under="ignore"):
            terms = np.exp(-np.outer(i, l) * bx) * transverse
        occ = terms.sum(axis=1)
        occ[0] = np.sum(transverse - 1.0)
    if inp.normalize:
        occ *= NT / occ.sum()
    return occ


def overlap_variance(inp: ThermalInput) -> ThermalEstimate:
    """Variance of the overlap operator and the implied thermal occupation n_T."""
    Tc = critical_temperature(inp.N, inp.trap)
    T = temperature_for_fraction(inp.condensate_fraction, Tc)
    N0 = inp.N * inp.condensate_fraction
    if T == 0:
        return ThermalEstimate(0.0, Tc, 0.0, 0.0, 0.0, 0.0, inp.i_max)

    i_max = inp.i_max
    while True:
        occ = level_occupations(inp, T, i_max)
        if occ[-1] <= OCCUPANCY_CUTOFF:
            break
        i_max *= 2
        if i_max > HARD_CAP:
            raise CutoffError(f"occupancy at level cutoff exceeds {OCCUPANCY_CUTOFF} below {HARD_CAP}")

    k = TWO_PI / inp.wavelength
    wx = inp.trap[0]
    M = matrix_elements(i_max, k, inp.mass, wx)
    M0 = condensate_elements(i_max, k, inp.mass, wx, inp.tf_radius)
    n = occ[1:]
    interference = 2.0 * N0 * float(np.sum(M0[1:] ** 2 * n))
    autocorr = float(n @ (M[1:, 1:] ** 2) @ n)
    du2 = interference + autocorr
    return ThermalEstimate(T, Tc, du2, interference, autocorr, 8.0 * du2 / inp.N, i_max)
