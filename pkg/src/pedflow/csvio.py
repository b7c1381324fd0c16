"""Snapshot CSV format shared by the three tiers.

One file per snapshot: index, position, and both densities per row.
Floats are written with repr(), the shortest round-trip form, so equal
runs produce byte-identical files.
"""

from __future__ import annotations

import csv

import numpy as np


def write_density_csv(path, index_label: str, cell_size: float, rho_plus, rho_minus) -> None:
    rho_plus = np.asarray(rho_plus)
    rho_minus = np.asarray(rho_minus)
    with open(path, "w", newline="") as fh:
        fh.write(f"{index_label},x,rho_plus,rho_minus\n")
        for k in range(rho_plus.shape[0]):
            x = k * cell_size
            fh.write(f"{k},{x!r},{float(rho_plus[k])!r},{float(rho_minus[k])!r}\n")


def read_density_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        plus, minus = [], []
        for row in reader:
            plus.append(float(row["rho_plus"]))
            minus.append(float(row["rho_minus"]))
    return np.array(plus), np.array(minus)
