"""Single-photon counter model for the cavity transmission."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class DetectorModel:
    rate_per_photon: float = 0.8e6  # counts/s per intracavity photon
    dead_time: float = 50e-9  # s, non-paralyzable
    bin: float = 2e-6  # s
    seed: int = 0

    def __post_init__(self):
        if self.rate_per_photon < 0 or self.dead_time < 0 or self.bin <= 0:
            raise ValueError("detector rate/dead time must be >= 0 and bin > 0")

    def detected_rate(self, photons):
        """Mean detected count rate for a given intracavity photon number."""
        r = self.rate_per_photon * np.asarray(photons, dtype=float)
        return r / (1.0 + r * self.dead_time)


@dataclass
class TransmissionTrace:
    """Counts per time bin of uniform width starting at ``t0``."""

    t0: float
    bin_width: float
    counts: np.ndarray
    seed: Optional[int] = None
    expected: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.bin_width * np.arange(len(self.counts))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_bin_start", "counts"])
            for t, c in zip(self.times, self.counts):
                w.writerow([repr(float(t)), int(c)])

    @classmethod
    def from_csv(cls, path) -> "TransmissionTrace":
        data = np.genfromtxt(path, delimiter=",", names=True)
        t = np.atleast_1d(data["t_bin_start"])
        counts = np.atleast_1d(data["counts"]).astype(np.int64)
        if len(t) < 2:
            raise ValueError("need at least two bins to infer the bin width")
        widths = np.diff(t)
        if not np.allclose(widths, widths[0], rtol=1e-6, atol=0):
            raise ValueError("counts trace is not uniformly binned")
        return cls(t0=float(t[0]), bin_width=float(widths[0]), counts=counts)


def transmission_counts(photons, dt: float, detector: DetectorModel, t0: float = 0.0) -> TransmissionTrace:
    """Bin a uniformly sampled photon-number series into Poisson counts.

    Expected counts per bin integrate the dead-time-limited rate over the
    samples in the bin; realized counts are Poisson draws from a generator
    seeded with ``detector.seed``.
    """
    photons = np.asarray(photons, dtype=float)
    per_bin = int(round(detector.bin / dt))
    if per_bin < 1 or abs(per_bin * dt - detector.bin) > 1e-9 * detector.bin:
        raise ValueError("detector bin must be a multiple of the sample interval")
    n_bins = len(photons) // per_bin
    rate = detector.detected_rate(photons[: n_bins * per_bin])
    expected = rate.reshape(n_bins, per_bin).sum(axis=1) * dt
    rng = np.random.default_rng(detector.seed)
    counts = rng.poisson(expected)
    return TransmissionTrace(t0=t0, bin_width=detector.bin, counts=counts,
                             seed=detector.seed, expected=expected)
