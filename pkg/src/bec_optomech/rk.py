"""Fixed-step explicit Runge-Kutta stepping over a Butcher tableau."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop


@dataclass(frozen=True)
class Tableau:
    name: str
    order: int
    a: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]
    c: Tuple[float, ...]


RK4 = Tableau(
    "rk4", 4,
    a=((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)),
    b=(1 / 6, 1 / 3, 1 / 3, 1 / 6),
    c=(0.0, 0.5, 0.5, 1.0),
)

# 8th-order propagating solution of Dormand-Prince 8(5,3), used without error control
RK8 = Tableau(
    "rk8", 8,
    a=tuple(tuple(float(v) for v in _dop.A[i, :i]) for i in range(_dop.N_STAGES)),
    b=tuple(float(v) for v in _dop.B),
    c=tuple(float(v) for v in _dop.C[: _dop.N_STAGES]),
)

TABLEAUS = {"rk4": RK4, "rk8": RK8}


def get_tableau(method) -> Tableau:
    if isinstance(method, Tableau):
        return method
    try:
        return TABLEAUS[method]
    except KeyError:
        raise ValueError(f"unknown integration method {method!r}; choose from {sorted(TABLEAUS)}")


def step(f: Callable[[float, Sequence[float]], Sequence[float]], t: float, y: Sequence[float],
         dt: float, tab: Tableau) -> list:
    """One explicit RK step on a short tuple/list state of Python floats."""
    dim = len(y)
    ks = []
    for ai, ci in zip(tab.a, tab.c):
        if ai:
            yi = [y[d] + dt * sum(a * k[d] for a, k in zip(ai, ks) if a != 0.0) for d in range(dim)]
        else:
            yi = y
        ks.append(f(t + ci * dt, yi))
    return [y[d] + dt * sum(b * k[d] for b, k in zip(tab.b, ks) if b != 0.0) for d in range(dim)]


def integrate(f, y0, t0: float, dt: float, n_steps: int, method="rk4", sample_every: int = 1,
              stop: Callable[[float, list], bool] = None):
    """Fixed-step integration with sampling every ``sample_every`` steps.

    ``stop(t, y)`` is checked after each step; a True return records the
    state and ends the integration early. Returns ``(t, Y, stopped_at)``.
    """
    tab = get_tableau(method)
    y = [float(v) for v in y0]
    n_samples = n_steps // sample_every + 2
    ts = np.empty(n_samples)
    ys = np.empty((n_samples, len(y)))
    ts[0], ys[0] = t0, y
    j = 1
    stopped = None
    for i in range(1, n_steps + 1):
        y = step(f, t0 + (i - 1) * dt, y, dt, tab)
        t = t0 + i * dt
        if not all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at t={t:.6g}")
        halt = stop is not None and stop(t, y)
        if halt or i % sample_every == 0:
            ts[j], ys[j] = t, y
            j += 1
        if halt:
            stopped = t
            break
    return ts[:j], ys[:j], stopped
