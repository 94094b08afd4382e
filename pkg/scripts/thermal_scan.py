"""Thermal occupation n_T against condensate fraction, for both level models.

Usage: python scripts/thermal_scan.py [outdir]
"""

import csv
import sys
from pathlib import Path

import numpy as np

from bec_optomech import thermal


def main(out="results/thermal"):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "n_T.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["condensate_fraction", "T_over_Tc", "n_T_1d", "n_T_3d"])
        for frac in np.linspace(0.5, 0.99, 15):
            row = [frac]
            for mode in ("1d", "3d"):
                est = thermal.overlap_variance(thermal.ThermalInput(condensate_fraction=frac, mode=mode))
                if mode == "1d":
                    row.append(est.T / est.Tc)
                row.append(est.n_T)
            w.writerow([f"{v:.6g}" for v in row])
            print(*(f"{v:.4g}" for v in row))


if __name__ == "__main__":
    main(*sys.argv[1:])
