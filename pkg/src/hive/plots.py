"""Static figure emitters. Every function renders to a file through the
Agg backend; no display is ever required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import Trajectory
from .regime import CYCLES, INSTABILITY, MULTIPLE_STABLE, UNIQUE_STABLE, RegimeGrid

REGIME_COLORS = {
    UNIQUE_STABLE: "#4caf50",
    MULTIPLE_STABLE: "#ffb300",
    CYCLES: "#ef6c00",
    INSTABILITY: "#c62828",
}


def plot_trajectory(path, traj: Trajectory, names=None):
    S = traj.N.shape[1]
    names = names or [f"family {j+1}" for j in range(S)]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for j in range(S):
        ax1.plot(traj.t, traj.N[:, j], label=names[j])
    ax1.set_ylabel("population")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(traj.t, traj.welfare, color="k", label="welfare")
    ax2b = ax2.twinx()
    ax2b.plot(traj.t, traj.budget_utilization, color="tab:red", ls="--",
              label="budget utilization")
    ax2.set_xlabel("t")
    ax2.set_ylabel("welfare")
    ax2b.set_ylabel("budget utilization")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_eigenvalues(path, records):
    fig, ax = plt.subplots(figsize=(6, 5))
    for i, rec in enumerate(records):
        if rec.eigenvalues is None:
            continue
        ev = rec.eigenvalues
        ax.scatter(ev.real, ev.imag, label=f"eq {i} ({rec.stability})", s=40)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_branch(path, result):
    fig, ax = plt.subplots(figsize=(7, 5))
    ps = [p for p, _, _ in result.branch]
    res = [lead.real for _, _, lead in result.branch]
    ims = [abs(lead.imag) for _, _, lead in result.branch]
    ax.plot(ps, res, "o-", label="Re(leading pair)")
    ax.plot(ps, ims, "s--", color="gray", label="|Im(leading pair)|")
    ax.axhline(0.0, color="k", lw=0.8)
    if result.found and result.p_critical is not None:
        ax.axvline(result.p_critical, color="tab:red", ls=":",
                   label=f"crossing at {result.p_critical:.3f}")
    ax.set_xlabel(result.param_name)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_regime_grid(path, grid: RegimeGrid):
    sel1, lo1, hi1, n1 = grid.axis1
    sel2, lo2, hi2, n2 = grid.axis2
    v1 = np.linspace(lo1, hi1, n1)
    v2 = np.linspace(lo2, hi2, n2)
    fig, ax = plt.subplots(figsize=(7.5, 6))
    seen = {}
    for idx, cell in enumerate(grid.cells):
        i, j = divmod(idx, n2)
        color = REGIME_COLORS.get(cell.classification, "#9e9e9e")
        label = cell.classification if cell.classification not in seen else None
        seen[cell.classification] = True
        ax.scatter(v1[i], v2[j], c=color, s=120, marker="s", label=label)
    f1, f2 = grid.frontier_estimates()
    if f1 is not None:
        ax.axvline(f1, color="b", ls="--", lw=1,
                   label=f"{sel1} frontier ~ {f1:.3f}")
    if f2 is not None:
        ax.axhline(f2, color="b", ls=":", lw=1,
                   label=f"{sel2} frontier ~ {f2:.3f}")
    ax.set_xlabel(sel1)
    ax.set_ylabel(sel2)
    ax.legend(fontsize=8, loc="upper left", framealpha=0.9)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
