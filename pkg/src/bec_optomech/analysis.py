"""Oscillation-frequency analysis of transmission traces.

The chain is: boxcar smoothing, prominence-based peak detection, and a
per-time-bin frequency from the mean interval between successive peaks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import peak_prominences


@dataclass
class FrequencySeries:
    t_bin: np.ndarray  # bin centres, relative to t_ref
    frequency: np.ndarray  # Hz, NaN where undefined
    n_intervals: np.ndarray
    stderr: np.ndarray
    t_ref: float = 0.0
    bin_width: float = 50e-6

    def defined(self) -> np.ndarray:
        return np.isfinite(self.frequency)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_bin", "frequency_hz", "n_intervals", "stderr_hz"])
            for row in zip(self.t_bin, self.frequency, self.n_intervals, self.stderr):
                w.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2]), repr(float(row[3]))])


def moving_average(values, window: int) -> np.ndarray:
    """Centred boxcar mean over ``window`` samples; edges use shrunken windows."""
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must span at least one bin")
    left = window // 2
    right = window - 1 - left
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(len(values))
    lo = np.clip(idx - left, 0, len(values))
    hi = np.clip(idx + right + 1, 0, len(values))
    return (csum[hi] - csum[lo]) / (hi - lo)


def window_bins(window: float, bin_width: float) -> int:
    """Convert a smoothing window in seconds to a whole number of bins."""
    if window < bin_width * (1 - 1e-9):
        raise ValueError("smoothing window shorter than the bin width")
    n = int(round(window / bin_width))
    if abs(n * bin_width - window) > 1e-6 * window:
        raise ValueError("smoothing window must be a multiple of the bin width")
    return n


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Interior local maxima; a flat top is reported at its first sample."""
    out = []
    n = len(values)
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            if j + 1 < n and values[j + 1] < values[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=int)


def detect_peaks(values, dt: float, t0: float = 0.0, min_prominence=None,
                 min_separation: float = 10e-6, refine: bool = True) -> np.ndarray:
    """Times of prominent, well separated local maxima.

    Prominence is measured against the higher of the two flanking minima
    (``scipy.signal.peak_prominences``) and defaults to 25% of the trace
    maximum. Among peaks closer than ``min_separation`` the higher one is
    kept; equal heights keep the earlier peak. With ``refine`` the peak time
    is moved to the vertex of the parabola through the three samples around
    the maximum.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < 3:
        raise ValueError("need at least three samples")
    if min_prominence is None:
        min_prominence = 0.25 * float(np.max(values))
    cand = _local_maxima(values)
    if len(cand) == 0:
        return np.array([])
    prom = peak_prominences(values, cand)[0]
    cand = cand[prom >= min_prominence]
    if min_separation > 0 and len(cand) > 1:
        order = sorted(range(len(cand)), key=lambda k: (-values[cand[k]], cand[k]))
        min_gap = min_separation / dt
        kept = []
        for k in order:
            if all(abs(cand[k] - cand[m]) >= min_gap - 1e-9 for m in kept):
                kept.append(k)
        cand = np.sort(cand[kept])
    offset = np.zeros(len(cand))
    if refine:
        for m, i in enumerate(cand):
            a, b, c = values[i - 1], values[i], values[i + 1]
            curv = a - 2.0 * b + c
            if curv < 0:
                offset[m] = 0.5 * (a - c) / curv
    return t0 + (cand + offset) * dt


def instantaneous_frequency(peak_times, bin: float = 50e-6, t_ref=None) -> FrequencySeries:
    """Frequency per time bin as 1/mean(inter-peak interval).

    An interval is assigned to the bin containing its midpoint; bins are
    referenced to ``t_ref`` (default: the first peak). Bins with no interval
    carry NaN.
    """
    peaks = np.asarray(peak_times, dtype=float)
    if len(peaks) and np.any(np.diff(peaks) < 0):
        raise ValueError("peak times must be sorted")
    if t_ref is None:
        t_ref = float(peaks[0]) if len(peaks) else 0.0
    if len(peaks) < 2:
        return FrequencySeries(np.array([]), np.array([]), np.array([], dtype=int),
                               np.array([]), t_ref, bin)
    intervals = np.diff(peaks)
    mids = 0.5 * (peaks[1:] + peaks[:-1]) - t_ref
    idx = np.floor(mids / bin).astype(int)
    keep = idx >= 0
    intervals, idx = intervals[keep], idx[keep]
    n_bins = int(idx.max()) + 1 if len(idx) else 0
    freq = np.full(n_bins, np.nan)
    count = np.zeros(n_bins, dtype=int)
    err = np.full(n_bins, np.nan)
    for b in range(n_bins):
        sel = intervals[idx == b]
        count[b] = len(sel)
        if len(sel):
            freq[b] = 1.0 / sel.mean()
        if len(sel) >= 2:
            err[b] = np.std(1.0 / sel, ddof=1) / np.sqrt(len(sel))
    centres = (np.arange(n_bins) + 0.5) * bin
    return FrequencySeries(centres, freq, count, err, t_ref, bin)


def frequency_chirp(values, dt: float, t0: float = 0.0, window: float = 10e-6,
                    prominence_fraction: float = 0.25, min_separation: float = 10e-6,
                    bin: float = 50e-6) -> FrequencySeries:
    """Smooth, detect peaks and bin the instantaneous frequency in one go."""
    values = np.asarray(values, dtype=float)
    smooth = moving_average(values, window_bins(window, dt))
    peaks = detect_peaks(smooth, dt, t0, prominence_fraction * float(np.max(smooth)),
                         min_separation)
    return instantaneous_frequency(peaks, bin)


def segment_contrast(values, bounds) -> np.ndarray:
    """min/max of ``values`` on each index segment [bounds[k], bounds[k+1]).

    Values near zero mean the signal is fully modulated in that segment.
    """
    values = np.asarray(values, dtype=float)
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = values[a:b]
        top = seg.max() if len(seg) else 0.0
        out.append(seg.min() / top if top > 0 else 1.0)
    return np.array(out)
