"""Steady-state resonance curves n(delta_c) for several pump strengths.

Writes one CSV per pump strength plus a JSON summary of the fold detunings
and the critical pump. Usage: python scripts/steady_curves.py [outdir]
"""

import json
import sys
from pathlib import Path

import numpy as np

from bec_optomech import twomode as tm
from bec_optomech.units import TWO_PI, SystemParams

PHOTONS = (0.02, 0.07, 1.0, 7.3)


def main(out="results/steady"):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    base = SystemParams()
    grid = TWO_PI * np.linspace(0.0, 240e6, 4801)
    summary = {"eta_cr_over_kappa": tm.critical_pump(base) / base.kappa, "curves": {}}
    for n in PHOTONS:
        p = base.with_photons(n)
        rows = tm.steady_sweep(p, grid)
        tm.write_steady_csv(rows, out / f"steady_{n:g}.csv".replace(".", "p", 1))
        summary["curves"][f"{n:g}"] = {
            "fold_detunings_mhz": [f / TWO_PI / 1e6 for f in tm.fold_detunings(p)],
            "max_photons": max(r[2] for r in rows),
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main(*sys.argv[1:])
