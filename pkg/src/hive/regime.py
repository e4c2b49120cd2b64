"""Regime classification: label one parameter point as unique-stable,
multiple-stable, cycles, or instability, and sweep a two-parameter
grid into a regime map with frontier estimates.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import integrate, project_budget
from .equilibrium import find_all
from .errors import HiveError
from .model import HiveConfig, parse_config, serialize_config, with_param
from .spectral import detect_limit_cycle, jacobian_eigen
from .util import worker_count

UNIQUE_STABLE = "unique-stable"
MULTIPLE_STABLE = "multiple-stable"
CYCLES = "cycles"
INSTABILITY = "instability"

PROBE_HORIZON = 200.0
PROBE_STEP = 0.05
DIVERGE_UTIL = 5.0
DIVERGE_POP = 1e3


@dataclass
class RegimeCell:
    gamma_value: float
    eta_value: float
    classification: str
    n_interior: int
    n_stable: int
    cycle_period: float | None = None
    notes: list[str] = field(default_factory=list)


@dataclass
class RegimeGrid:
    axis1: tuple[str, float, float, int]   # (selector, lo, hi, resolution)
    axis2: tuple[str, float, float, int]
    cells: list[RegimeCell]                # row-major: axis1 outer, axis2 inner

    def frontier_estimates(self):
        """First classification change along each axis, averaged over the
        transects of the other axis; None when an axis never changes."""
        sel1, lo1, hi1, n1 = self.axis1
        sel2, lo2, hi2, n2 = self.axis2
        v1 = np.linspace(lo1, hi1, n1)
        v2 = np.linspace(lo2, hi2, n2)
        grid = np.array([c.classification for c in self.cells], dtype=object)
        grid = grid.reshape(n1, n2)
        f1 = []
        for j in range(n2):
            col = grid[:, j]
            for i in range(1, n1):
                if col[i] != col[i - 1]:
                    f1.append(0.5 * (v1[i] + v1[i - 1]))
                    break
        f2 = []
        for i in range(n1):
            row = grid[i, :]
            for j in range(1, n2):
                if row[j] != row[j - 1]:
                    f2.append(0.5 * (v2[j] + v2[j - 1]))
                    break
        est1 = float(np.median(f1)) if f1 else None
        est2 = float(np.median(f2)) if f2 else None
        return est1, est2


def _divergence_probe(cfg: HiveConfig, horizon: float = PROBE_HORIZON,
                      step: float = PROBE_STEP) -> tuple[bool, list[str]]:
    """Integrate three canonical starts in chunks, stopping a run as
    soon as it diverges; True when any run diverges."""
    notes = []
    centroid = cfg.centroid()
    starts = [centroid,
              0.25 * centroid,
              project_budget(1.5 * centroid, cfg.c, cfg.B)]
    chunk = max(10.0 * step, horizon / 10.0)
    diverged = False
    for i, N0 in enumerate(starts):
        N = np.asarray(N0, dtype=float)
        t_done = 0.0
        verdict = None
        while horizon - t_done >= step:
            try:
                traj = integrate(cfg, N, step=step,
                                 horizon=max(min(chunk, horizon - t_done), step))
            except HiveError as exc:
                verdict = f"probe{i}:failed:{type(exc).__name__}"
                break
            N = traj.N[-1]
            t_done += traj.t[-1]
            util = traj.budget_utilization[-1]
            peak = float(N.max())
            if util > DIVERGE_UTIL or peak > DIVERGE_POP:
                diverged = True
                verdict = f"probe{i}:diverged(util={util:.2f},max={peak:.1f})"
                break
            if peak < 1e-6:
                verdict = f"probe{i}:collapsed"
                break
            if any(lbl == "converged" for _, lbl in traj.events):
                verdict = f"probe{i}:bounded(max={peak:.2f})"
                break
        notes.append(verdict or f"probe{i}:bounded(max={float(N.max()):.2f})")
    return diverged, notes


def classify_cell(cfg: HiveConfig, starts: int = 48, seed: int = 0,
                  gamma_value: float = float("nan"),
                  eta_value: float = float("nan"),
                  cycle_periods: int = 15, cycle_dt: float = 0.02,
                  cycle_max_horizon: float = 600.0,
                  probe_horizon: float = PROBE_HORIZON,
                  probe_step: float = PROBE_STEP,
                  newton_iter: int = 200) -> RegimeCell:
    """Apply the regime decision procedure to one config.

    Order: two or more locally stable interior equilibria make the cell
    multiple-stable; a single stable interior equilibrium unique-stable;
    an unstable interior equilibrium with a rotating leading pair whose
    perturbed flow settles onto a bounded cycle marks cycles; everything
    else (no interior equilibrium, or divergent / collapsing probe
    trajectories) is instability.
    """
    notes: list[str] = []
    try:
        recs = find_all(cfg, starts=starts, seed=seed, max_iter=newton_iter)
    except HiveError as exc:
        notes.append(f"find_all_failed:{type(exc).__name__}")
        recs = []
    interior = [r for r in recs if r.interior and r.valid]
    n_stable = 0
    unstable_spirals = []
    for rec in interior:
        try:
            _, _, cls = jacobian_eigen(cfg, rec)
        except HiveError:
            notes.append("jacobian_failed")
            continue
        if cls.tag.startswith("stable"):
            n_stable += 1
        elif cls.tag == "unstable" and abs(cls.leading_pair.imag) > 1e-8:
            unstable_spirals.append(rec)
    n_interior = len(interior)

    if n_stable >= 2:
        return RegimeCell(gamma_value, eta_value, MULTIPLE_STABLE,
                          n_interior, n_stable, None, notes)
    if n_interior == 1 and n_stable == 1:
        return RegimeCell(gamma_value, eta_value, UNIQUE_STABLE,
                          n_interior, n_stable, None, notes)
    for rec in unstable_spirals:
        info = detect_limit_cycle(cfg, rec, perturbation=0.05,
                                  periods=cycle_periods, dt=cycle_dt,
                                  max_horizon=cycle_max_horizon)
        if info.found:
            return RegimeCell(gamma_value, eta_value, CYCLES,
                              n_interior, n_stable, info.period, notes)
        if info.period is not None and info.convergence_ratio is not None \
                and info.convergence_ratio < 1.2:
            # bounded oscillation still growing gently at the horizon:
            # the attractor is periodic, the amplitude just has not
            # settled within the classification budget
            notes.append("cycle_amplitude_unsaturated")
            return RegimeCell(gamma_value, eta_value, CYCLES,
                              n_interior, n_stable, info.period, notes)
        notes.append("unstable_spiral_without_bounded_cycle")
    diverged, probe_notes = _divergence_probe(cfg, horizon=probe_horizon,
                                               step=probe_step)
    notes.extend(probe_notes)
    if n_stable == 1:
        # a stable equilibrium coexisting with extra interior structure
        notes.append("stable_equilibrium_with_companions")
        return RegimeCell(gamma_value, eta_value, UNIQUE_STABLE,
                          n_interior, n_stable, None, notes)
    return RegimeCell(gamma_value, eta_value, INSTABILITY,
                      n_interior, n_stable, None, notes)


def _cell_task(args):
    doc, sel1, v1, sel2, v2, starts, seed, opts = args
    cfg = parse_config(json.loads(doc))
    cfg = with_param(cfg, sel1, v1)
    cfg = with_param(cfg, sel2, v2)
    gamma_value = v1 if sel1.startswith("gamma") else (
        v2 if sel2.startswith("gamma") else float("nan"))
    eta_value = v1 if sel1.startswith("eta") else (
        v2 if sel2.startswith("eta") else float("nan"))
    return classify_cell(cfg, starts=starts, seed=seed,
                         gamma_value=gamma_value, eta_value=eta_value, **opts)


def sweep(base: HiveConfig, axis1: tuple[str, float, float, int],
          axis2: tuple[str, float, float, int], starts: int = 48,
          seed: int = 0, parallel: bool = True,
          progress=None, cell_options: dict | None = None) -> RegimeGrid:
    """Classify every point of a two-axis grid; deterministic per seed.

    axis = (selector, lo, hi, resolution). The bare "gamma" selector
    sets every off-diagonal spillover uniformly except entries pinned in
    the base config. Cells are independent and evaluated by a bounded
    worker pool; results are gathered by index.
    """
    sel1, lo1, hi1, n1 = axis1
    sel2, lo2, hi2, n2 = axis2
    if n1 < 2 or n2 < 2:
        raise ValueError("axis resolutions must be at least 2")
    doc = json.dumps(json.loads(serialize_config(base)))
    v1s = np.linspace(lo1, hi1, n1)
    v2s = np.linspace(lo2, hi2, n2)
    opts = cell_options or {}
    tasks = [(doc, sel1, float(v1), sel2, float(v2), starts, seed, opts)
             for v1 in v1s for v2 in v2s]
    cells: list[RegimeCell]
    if parallel and worker_count() > 1:
        with ProcessPoolExecutor(max_workers=worker_count()) as ex:
            cells = []
            for i, cell in enumerate(ex.map(_cell_task, tasks)):
                cells.append(cell)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        cells = []
        for i, t in enumerate(tasks):
            cells.append(_cell_task(t))
            if progress:
                progress(i + 1, len(tasks))
    return RegimeGrid(axis1=axis1, axis2=axis2, cells=cells)
