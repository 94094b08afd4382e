"""Parameter sweeps over one or two config keys, with a JSON manifest."""

from __future__ import annotations

import hashlib
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .config import FIELDS, ConfigError, RunConfig, dumps, unknown_key_error, with_values
from .runner import RunRecord, execute, write_json


@dataclass(frozen=True)
class Axis:
    key: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.key not in FIELDS:
            raise unknown_key_error(self.key)
        if not isinstance(FIELDS[self.key].default, (int, float)) or isinstance(FIELDS[self.key].default, bool):
            raise ConfigError(f"cannot sweep non-numeric key {self.key!r}")
        if self.count < 1:
            raise ConfigError("sweep count must be >= 1")
        if self.scale not in ("linear", "log"):
            raise ConfigError("sweep scale must be linear or log")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log sweeps need positive bounds")

    def values(self) -> List:
        if self.count == 1:
            vals = np.array([self.start])
        elif self.scale == "log":
            vals = np.geomspace(self.start, self.stop, self.count)
        else:
            vals = np.linspace(self.start, self.stop, self.count)
        if isinstance(FIELDS[self.key].default, int):
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``key=start:stop:count[:log]``."""
        try:
            key, rng = text.split("=", 1)
            parts = rng.split(":")
            scale = parts[3] if len(parts) == 4 else "linear"
            if len(parts) not in (3, 4):
                raise ValueError
            return cls(key.strip(), float(parts[0]), float(parts[1]), int(parts[2]), scale)
        except ValueError:
            raise ConfigError(f"bad sweep axis {text!r}; expected key=start:stop:count[:log]") from None


@dataclass(frozen=True)
class SweepSpec:
    subcommand: str
    base: RunConfig
    axes: Tuple[Axis, ...]
    jobs: Optional[int] = None  # None: available parallelism
    seed: int = 0
    fmt: str = "csv"

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep takes one or two axes")
        if len({a.key for a in self.axes}) != len(self.axes):
            raise ConfigError("sweep axes must use distinct keys")

    def points(self) -> List[dict]:
        grids = [a.values() for a in self.axes]
        return [dict(zip([a.key for a in self.axes], combo)) for combo in itertools.product(*grids)]

    def sweep_id(self) -> str:
        payload = json.dumps({"sub": self.subcommand, "base": dumps(self.base), "seed": self.seed,
                              "fmt": self.fmt, "axes": [a.__dict__ for a in self.axes]}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class SweepResult:
    manifest_path: Path
    entries: List[dict] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(e["status"] != "complete" for e in self.entries)


def _one(args):
    sub, cfg, out, seed, fmt = args
    try:
        return execute(sub, cfg, out, seed, fmt)
    except Exception as exc:  # reported per run in the manifest
        return f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, out) -> SweepResult:
    out = Path(out)
    points = spec.points()
    tasks = [(spec.subcommand, with_values(spec.base, **pt), out, spec.seed, spec.fmt) for pt in points]
    jobs = spec.jobs or os.cpu_count() or 1
    if jobs == 1 or len(tasks) == 1:
        results = [_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_one, tasks))
    entries = []
    for pt, res in zip(points, results):
        entry = {"values": pt}
        if isinstance(res, RunRecord):
            run_dir = out / res.name
            missing = [o for o in res.outputs if not (run_dir / o).exists()]
            entry.update(run_id=res.run_id, status="complete" if not missing else "missing_artifacts",
                         artifacts={o: str(Path(res.name) / o) for o in res.outputs},
                         missing=missing, summary=res.summary, wall_time=res.wall_time)
        else:
            entry.update(run_id=None, status="failed", error=res, artifacts={}, missing=[],
                         summary={}, wall_time=None)
        entries.append(entry)
    sdir = out / f"sweep-{spec.sweep_id()}"
    sdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": spec.subcommand,
        "axes": [a.__dict__ for a in spec.axes],
        "seed": spec.seed,
        "entries": entries,
    }
    path = sdir / "manifest.json"
    write_json(path, manifest)
    return SweepResult(path, entries)
