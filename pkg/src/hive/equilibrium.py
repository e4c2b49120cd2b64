"""Steady-state search: roots of the marginal value field with the
boundary sign condition, found by damped Newton in log-population
coordinates from a deterministic multistart layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .allocator import Allocation
from .dynamics import marginal_value
from .errors import HiveError, NoConvergence
from .model import HiveConfig

V_TOL = 1e-9               # Newton convergence target on max |V_j|
V_RESIDUAL_LIMIT = 1e-8    # record validity threshold
ENTRY_DELTA = 1e-6         # probe population for the boundary sign test
DEDUP_RTOL = 1e-5
MAX_ITER = 200
FD_STEP = 1e-6


@dataclass
class EquilibriumRecord:
    """One steady-state candidate with validity diagnostics.

    jacobian / eigenvalues / stability are filled by the spectral
    module after construction.
    """

    N_star: np.ndarray
    active_set: tuple[int, ...]
    allocation: Allocation
    V_residual: float
    inactive_ok: bool
    entry_values: dict[int, float]
    budget_ok: bool
    converged: bool
    W_star: float
    jacobian: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    stability: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return (self.converged and self.V_residual < V_RESIDUAL_LIMIT
                and self.inactive_ok and self.budget_ok)

    @property
    def interior(self) -> bool:
        return len(self.active_set) == self.N_star.size


def _value_on(cfg, idx, x, lam_box):
    N = np.zeros(cfg.S)
    N[idx] = np.exp(x)
    V, alloc = marginal_value(cfg, N, lam0=lam_box[0])
    if alloc.lam.any():
        lam_box[0] = alloc.lam
    return V[idx], alloc


def solve_from(cfg: HiveConfig, N0, tol: float = V_TOL,
               max_iter: int = MAX_ITER) -> EquilibriumRecord:
    """Damped Newton on V(exp(x)) over the support of N0.

    The finite-difference Jacobian (central, relative step 1e-6) is the
    same derivative estimate the spectral module uses, so a converged
    record is consistent with its later eigenvalue analysis. Raises
    NoConvergence if damping cannot reduce the residual; a converged
    root that fails the boundary sign test is returned flagged, never
    silently accepted.
    """
    N0 = np.asarray(N0, dtype=float)
    idx = np.where(N0 > 0)[0]
    if idx.size == 0:
        raise ValueError("N0 must be positive on its intended active set")
    x = np.log(N0[idx])
    lam_box = [None]
    try:
        v, alloc = _value_on(cfg, idx, x, lam_box)
    except HiveError as exc:
        raise NoConvergence(f"allocation failed at the start point: {exc}") from exc
    x_cap = np.log(1e7 * cfg.B / cfg.c.min())
    for _ in range(max_iter):
        if np.max(x) > x_cap:
            raise NoConvergence("iterates diverged beyond any feasible scale")
        resid = float(np.max(np.abs(v)))
        if resid < tol:
            break
        J = np.empty((idx.size, idx.size))
        for k in range(idx.size):
            d = np.zeros_like(x)
            d[k] = FD_STEP
            try:
                vp, _ = _value_on(cfg, idx, x + d, lam_box)
                vm, _ = _value_on(cfg, idx, x - d, lam_box)
            except HiveError as exc:
                raise NoConvergence(f"allocation failed at a probe point: {exc}") from exc
            J[:, k] = (vp - vm) / (2 * FD_STEP)
        try:
            step = np.linalg.solve(J, -v)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(J, v, rcond=None)[0]
        step = np.clip(step, -2.0, 2.0)
        accepted = False
        t = 1.0
        for _ in range(30):
            try:
                v2, alloc2 = _value_on(cfg, idx, x + t * step, lam_box)
            except HiveError:
                t *= 0.5
                continue
            if np.max(np.abs(v2)) < resid:
                x, v, alloc = x + t * step, v2, alloc2
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise NoConvergence(f"damping stalled at residual {resid:.3e}")
    else:
        raise NoConvergence(f"no convergence in {max_iter} iterations")

    N_star = np.zeros(cfg.S)
    N_star[idx] = np.exp(x)
    return _build_record(cfg, N_star, idx, alloc, float(np.max(np.abs(v))))


def _build_record(cfg, N_star, idx, alloc, resid):
    inactive = [j for j in range(cfg.S) if j not in set(idx.tolist())]
    entry_values = {}
    inactive_ok = True
    for j in inactive:
        probe = N_star.copy()
        probe[j] = ENTRY_DELTA
        try:
            Vp, _ = marginal_value(cfg, probe)
            entry_values[j] = float(Vp[j])
        except HiveError:
            entry_values[j] = np.nan
            inactive_ok = False
            continue
        if entry_values[j] > V_RESIDUAL_LIMIT:
            inactive_ok = False
    budget_ok = bool(float(np.dot(cfg.c, N_star)) <= cfg.B + 1e-12)
    rec = EquilibriumRecord(
        N_star=N_star, active_set=tuple(int(j) for j in idx),
        allocation=alloc, V_residual=resid, inactive_ok=inactive_ok,
        entry_values=entry_values, budget_ok=budget_ok,
        converged=resid < V_RESIDUAL_LIMIT, W_star=alloc.W_star)
    if not inactive_ok:
        rec.notes.append("complementarity_fail")
    if not budget_ok:
        rec.notes.append("budget_exceeded")
    return rec


def interior_starts(cfg: HiveConfig, count: int, seed: int) -> np.ndarray:
    """Scrambled low-discrepancy starts on the 90%-budget simplex slice."""
    sob = qmc.Sobol(d=cfg.S, scramble=True, seed=seed)
    u = sob.random(count)
    u = np.clip(u, 1e-9, 1 - 1e-9)
    e = -np.log(u)                      # Dirichlet(1,...,1) via exponentials
    y = e / e.sum(axis=1, keepdims=True)
    return 0.9 * cfg.B * y / cfg.c[None, :]


def find_all(cfg: HiveConfig, starts: int = 64, seed: int = 0,
             include_boundary: bool = True,
             valid_only: bool = False,
             max_iter: int = MAX_ITER) -> list[EquilibriumRecord]:
    """Multistart search with deduplication, welfare-sorted.

    Runs solve_from from `starts` low-discrepancy interior points plus
    every single-family boundary candidate. Records within relative
    distance 1e-5 merge. An empty list is a legal outcome (the
    instability regime). valid_only filters to records satisfying the
    full equilibrium definition (residual, boundary signs, budget).
    """
    if starts < 1:
        raise ValueError("starts must be at least 1")
    records: list[EquilibriumRecord] = []

    def push(rec):
        for other in records:
            scale = np.maximum(np.abs(other.N_star), 1e-12)
            if np.max(np.abs(other.N_star - rec.N_star) / scale) < DEDUP_RTOL:
                return
        records.append(rec)

    for N0 in interior_starts(cfg, starts, seed):
        try:
            push(solve_from(cfg, N0, max_iter=max_iter))
        except HiveError:
            continue
    if include_boundary:
        for j in range(cfg.S):
            N0 = np.zeros(cfg.S)
            N0[j] = 0.5 * cfg.B / cfg.c[j]
            try:
                push(solve_from(cfg, N0, max_iter=max_iter))
            except HiveError:
                continue
    if valid_only:
        records = [r for r in records if r.valid]
    records.sort(key=lambda r: -r.W_star)
    return records
