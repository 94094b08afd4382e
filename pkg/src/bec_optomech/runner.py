"""Run orchestration: content-addressed run directories and subcommand bodies.

Every run lives in ``<out>/<subcommand>-<id>/`` where the id hashes the
subcommand, the serialized config, the seed, any input file and the code
version. A finished run is never recomputed or overwritten; its directory is
reused as is. Runs are staged in a temporary directory and renamed into
place, so a crash leaves no half-written run behind.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from . import __version__
from . import analysis, detector, gpe, thermal, twomode
from .config import RunConfig, dumps
from .units import HBAR, TWO_PI

log = logging.getLogger("bec_optomech")

SUBCOMMANDS = ("steady", "critical", "twomode", "gpe", "thermal", "analyze")


@dataclass
class RunRecord:
    run_id: str
    subcommand: str
    config: str
    seed: int
    version: str
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)
    wall_time: float = 0.0
    status: str = "pending"
    reused: bool = False

    @property
    def name(self) -> str:
        return f"{self.subcommand}-{self.run_id}"

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("reused")
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_id(subcommand: str, cfg: RunConfig, seed: int, extra: str = "") -> str:
    payload = json.dumps({"sub": subcommand, "config": dumps(cfg), "seed": seed,
                          "extra": extra, "version": __version__}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_table(writer: Callable[[Path], None], path: Path, fmt: str) -> Path:
    """Write a table through ``writer`` (a CSV writer) in the requested format."""
    csv_path = path.with_suffix(".csv")
    writer(csv_path)
    if fmt == "csv":
        return csv_path
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols: Dict[str, list] = {name: [] for name in rows[0]}
    for row in rows[1:]:
        for name, val in zip(rows[0], row):
            try:
                cols[name].append(float(val))
            except ValueError:
                cols[name].append(val)
    json_path = path.with_suffix(".json")
    write_json(json_path, cols)
    csv_path.unlink()
    return json_path


# subcommand bodies: (cfg, workdir, seed, fmt, **kw) -> (outputs, summary)

def _steady(cfg: RunConfig, wd: Path, seed: int, fmt: str, **_):
    outputs, summary = [], {}
    for photons in cfg.steady_photons:
        params = cfg.system_params(photons)
        bounds = cfg.steady_bounds()
        if bounds is None:
            ref = cfg.system_params(max(cfg.steady_photons))
            grid = twomode.detuning_sweep(ref, cfg.steady_points)
        else:
            grid = np.linspace(bounds[0], bounds[1], cfg.steady_points)
        rows = twomode.steady_sweep(params, grid)
        counts = {}
        for dc, *_rest in rows:
            counts[dc] = counts.get(dc, 0) + 1
        p = write_table(lambda path: twomode.write_steady_csv(rows, path),
                        wd / ("steady_photons_" + f"{photons:g}".replace(".", "p")), fmt)
        outputs.append(p.name)
        folds = twomode.fold_detunings(params)
        summary[f"{photons:g}"] = {
            "max_roots": max(counts.values()),
            "bistable": max(counts.values()) >= 3,
            "fold_detunings_hz": [f / TWO_PI for f in folds],
        }
    return outputs, {"curves": summary}


def _critical(cfg: RunConfig, wd: Path, seed: int, fmt: str, **_):
    params = cfg.system_params()
    eta = twomode.critical_pump(params)
    summary = {"eta_cr": eta, "eta_cr_over_kappa": eta / params.kappa,
               "photons_cr": (eta / params.kappa) ** 2}
    write_json(wd / "critical.json", summary)
    return ["critical.json"], summary


def _frequency_summary(values, dt, cfg: RunConfig):
    smooth = analysis.moving_average(values, analysis.window_bins(cfg.smooth_window, dt))
    top = float(np.max(smooth)) if len(smooth) else 0.0
    peaks = analysis.detect_peaks(smooth, dt, 0.0, cfg.prominence * top, cfg.min_separation)
    fs = analysis.instantaneous_frequency(peaks, cfg.freq_bin)
    first = fs.frequency[0] if len(fs.frequency) else float("nan")
    return fs, peaks, first


def _twomode(cfg: RunConfig, wd: Path, seed: int, fmt: str, **_):
    params = cfg.system_params()
    scan = cfg.scan(params)
    traj = twomode.integrate_scan(None, params, scan, cfg.dt, cfg.sample_interval,
                                  cfg.cavity, cfg.method)
    outputs = [write_table(traj.to_csv, wd / "trajectory", fmt).name]
    dt = traj.meta["sample_interval"]
    fs, peaks, first = _frequency_summary(traj.photons, dt, cfg)
    outputs.append(write_table(fs.to_csv, wd / "frequency", fmt).name)
    onset = fs.t_ref if len(peaks) else None
    contrast = (analysis.segment_contrast(traj.photons, twomode.mechanical_cycles(traj, onset))
                if onset is not None else np.array([]))
    summary = {
        "first_bin_frequency": first,
        "max_photons": float(traj.photons.max()),
        "bistable": twomode.is_bistable(params),
        "valid": traj.valid,
        "violation_time": traj.violation_time,
        "oscillation_onset": onset,
        "n_peaks": len(peaks),
        "n_cycles": len(contrast),
        "max_cycle_contrast": float(contrast.max()) if len(contrast) else None,
    }
    if cfg.detector:
        trace = detector.transmission_counts(traj.photons, dt, cfg.detector_model(seed))
        outputs.append(write_table(trace.to_csv, wd / "counts", fmt).name)
    return outputs, summary


def _gpe(cfg: RunConfig, wd: Path, seed: int, fmt: str, **_):
    params = cfg.system_params(cfg.gpe_photons)
    grid = cfg.grid()
    scan = cfg.scan(params, cfg.gpe_duration)
    gs = gpe.ground_state(params, grid, scan.delta_c_start, tol=cfg.gs_tol)
    gs.wavefunction.save(wd / "psi0.bin")
    loss = cfg.loss_model()
    traj = gpe.propagate_scan(gs.wavefunction, params, scan, loss, cfg.dt, cfg.sample_interval)
    traj.final.save(wd / "psi_final.bin")
    outputs = ["psi0.bin", "psi_final.bin", write_table(traj.to_csv, wd / "trajectory", fmt).name]
    dt = cfg.dt * max(1, round(cfg.sample_interval / cfg.dt))
    fs, peaks, first = _frequency_summary(traj.photons, dt, cfg)
    outputs.append(write_table(fs.to_csv, wd / "frequency", fmt).name)
    m = fs.defined()
    slope = float(np.polyfit(fs.t_bin[m], fs.frequency[m], 1)[0]) if m.sum() >= 2 else None
    summary = {
        "first_bin_frequency": first,
        "max_photons": float(traj.photons.max()),
        "atom_number_end": float(traj.atom_number[-1]),
        "oscillation_onset": fs.t_ref if len(peaks) else None,
        "frequency_slope": slope,
        "enhanced_loss_time": float(traj.enhanced.sum() * cfg.dt),
        "ground_state_photons": gs.photons,
        "chemical_potential_hz": gs.mu / (TWO_PI * HBAR),
    }
    if cfg.detector:
        trace = detector.transmission_counts(traj.photons, dt, cfg.detector_model(seed))
        outputs.append(write_table(trace.to_csv, wd / "counts", fmt).name)
    return outputs, summary


def _thermal(cfg: RunConfig, wd: Path, seed: int, fmt: str, **_):
    est = thermal.overlap_variance(cfg.thermal_input())
    summary = asdict(est)
    write_json(wd / "thermal.json", summary)
    return ["thermal.json"], summary


def _analyze(cfg: RunConfig, wd: Path, seed: int, fmt: str, input_path=None, **_):
    if input_path is None:
        raise ValueError("analyze needs an input counts CSV")
    trace = detector.TransmissionTrace.from_csv(input_path)
    fs = analysis.frequency_chirp(trace.counts, trace.bin_width, trace.t0, cfg.smooth_window,
                                  cfg.prominence, cfg.min_separation, cfg.freq_bin)
    out = write_table(fs.to_csv, wd / "frequency", fmt)
    first = fs.frequency[0] if len(fs.frequency) else float("nan")
    return [out.name], {"first_bin_frequency": first, "n_bins": len(fs.frequency)}


BODIES = {"steady": _steady, "critical": _critical, "twomode": _twomode, "gpe": _gpe,
          "thermal": _thermal, "analyze": _analyze}


def execute(subcommand: str, cfg: RunConfig, out, seed: int = 0, fmt: str = "csv",
            input_path=None) -> RunRecord:
    """Run one subcommand in its content-addressed directory, reusing finished runs."""
    if subcommand not in BODIES:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    out = Path(out)
    extra = fmt
    if input_path is not None:
        extra += ":" + file_digest(input_path)
    rid = run_id(subcommand, cfg, seed, extra)
    final = out / f"{subcommand}-{rid}"
    rec_path = final / "record.json"
    if rec_path.exists():
        rec = RunRecord.from_json(rec_path.read_text())
        if rec.status == "complete":
            rec.reused = True
            log.info("reusing finished run %s", final)
            return rec
    if final.exists():
        raise FileExistsError(f"{final} exists without a finished record; remove it to rerun")
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{subcommand}-{rid}-", dir=out))
    os.chmod(stage, 0o755)
    rec = RunRecord(rid, subcommand, dumps(cfg), seed, __version__)
    t0 = time.perf_counter()
    try:
        (stage / "config.txt").write_text(rec.config)
        outputs, summary = BODIES[subcommand](cfg, stage, seed, fmt, input_path=input_path)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    rec.outputs = ["config.txt"] + list(outputs)
    rec.summary = _jsonable(summary)
    rec.wall_time = time.perf_counter() - t0
    rec.status = "complete"
    (stage / "record.json").write_text(rec.to_json() + "\n")
    try:
        os.rename(stage, final)
    except OSError:
        # a concurrent identical run finished first; keep its outputs
        shutil.rmtree(stage, ignore_errors=True)
        rec = RunRecord.from_json(rec_path.read_text())
        rec.reused = True
    return rec
