"""Delimited-text exporters and the run manifest.

All floats are written with repr (shortest round-trip), so identical
inputs reproduce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .equilibrium import EquilibriumRecord
from .regime import RegimeGrid
from .statics import ElasticityMatrix


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def write_trajectory_csv(path, traj: Trajectory):
    S = traj.N.shape[1]
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"N_{j+1}" for j in range(S)]
                   + [f"V_{j+1}" for j in range(S)] + ["W_star", "budget_util"])
        for i in range(len(traj.t)):
            w.writerow([_fmt(traj.t[i])] + [_fmt(v) for v in traj.N[i]]
                       + [_fmt(v) for v in traj.V[i]]
                       + [_fmt(traj.welfare[i]), _fmt(traj.budget_utilization[i])])
    return path


def write_events_csv(path, traj: Trajectory):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "event"])
        for t, label in traj.events:
            w.writerow([_fmt(t), label])
    return path


def write_equilibria_csv(path, records: list[EquilibriumRecord]):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if records:
            S = records[0].N_star.size
            M = records[0].allocation.lam.size
        else:
            S = M = 0
        w.writerow(["id"] + [f"N_{j+1}" for j in range(S)] + ["W_star"]
                   + [f"lambda_{m+1}" for m in range(M)]
                   + ["stability", "max_abs_V", "valid", "notes"])
        for i, rec in enumerate(records):
            w.writerow([i] + [_fmt(v) for v in rec.N_star] + [_fmt(rec.W_star)]
                       + [_fmt(v) for v in rec.allocation.lam]
                       + [rec.stability or "", _fmt(rec.V_residual),
                          str(rec.valid).lower(), ";".join(rec.notes)])
    return path


def write_branch_csv(path, result):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        S = result.branch[0][1].size if result.branch else 0
        w.writerow(["p"] + [f"N_{j+1}" for j in range(S)] + ["re_lead", "im_lead"])
        for p, N, lead in result.branch:
            w.writerow([_fmt(p)] + [_fmt(v) for v in N]
                       + [_fmt(lead.real), _fmt(lead.imag)])
    return path


def write_matrix_csv(path, mat: ElasticityMatrix, row_names, col_names):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([mat.kind] + list(col_names) + ["flags"])
        flagtext = ";".join(mat.flags)
        for i, rname in enumerate(row_names):
            w.writerow([rname] + [_fmt(v) for v in mat.values[i]]
                       + [flagtext if i == 0 else ""])
    return path


def write_grid_csv(path, grid: RegimeGrid):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "eta", "classification", "n_interior",
                    "n_stable", "cycle_period"])
        for c in grid.cells:
            w.writerow([_fmt(c.gamma_value), _fmt(c.eta_value), c.classification,
                        c.n_interior, c.n_stable, _fmt(c.cycle_period)])
    return path


def write_manifest(path, options: dict):
    """Flat key-value run manifest, one option per line, sorted by key."""
    path = Path(path)
    lines = []
    for k in sorted(options):
        v = options[k]
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{k}={v}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
