"""Comparative statics at an equilibrium: elasticity matrices of shadow
prices with respect to preference weights and of populations with
respect to resource endowments, by warm-started re-solving under
central perturbations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibrium import EquilibriumRecord, solve_from
from .errors import HiveError
from .model import HiveConfig, with_param
from .spectral import jacobian_eigen
from .util import worker_count

DEFAULT_DELTA = 1e-2
BASIN_JUMP_RTOL = 0.5


@dataclass
class ElasticityMatrix:
    """Proportional-response matrix (dx/x)/(dp/p) with provenance."""

    values: np.ndarray          # SS: (M, S); RB: (S, M)
    kind: str                   # "SS" or "RB"
    step: float
    base_N: np.ndarray
    base_lam: np.ndarray
    intensity_argmax: np.ndarray   # per resource, the family using it most intensively
    flags: list[str]

    def column_pattern(self, col: int):
        """(max entry, min entry, magnified family present, negative present)."""
        v = self.values[:, col]
        return float(v.max()), float(v.min()), bool(v.max() > 1.0), bool(v.min() < 0.0)


def _resolve(cfg, warm_N):
    rec = solve_from(cfg, warm_N)
    return rec


def _pair_response(cfg_plus, cfg_minus, base_rec, delta, extract):
    """Central-difference proportional response; None on continuation loss."""
    base_N = base_rec.N_star
    try:
        rp = _resolve(cfg_plus, base_N)
        rm = _resolve(cfg_minus, base_N)
    except HiveError:
        return None
    for r in (rp, rm):
        scale = np.maximum(np.abs(base_N), 1e-12)
        if np.max(np.abs(r.N_star - base_N) / scale) > BASIN_JUMP_RTOL:
            return None
    return (extract(rp) - extract(rm)) / (2.0 * delta)


def stolper_samuelson(cfg: HiveConfig, record: EquilibriumRecord,
                      delta: float = DEFAULT_DELTA) -> ElasticityMatrix:
    """Shadow-price elasticities with respect to preference weights.

    Each weight is perturbed by +-delta proportionally, the remaining
    weights renormalized proportionally, and the equilibrium re-solved
    from the base point. Entries that lose the branch are flagged and
    left NaN, never fabricated.
    """
    if not (1e-4 <= delta <= 0.2):
        raise ValueError("delta must lie in [1e-4, 0.2]")
    lam0 = record.allocation.lam
    vals = np.full((cfg.M, cfg.S), np.nan)
    flags: list[str] = []

    def one(j):
        wj = cfg.w[j]
        cp = with_param(cfg, f"w[{j}]", wj * (1 + delta))
        cm = with_param(cfg, f"w[{j}]", wj * (1 - delta))
        return _pair_response(cp, cm, record, delta,
                              lambda r: r.allocation.lam / lam0)

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        results = list(ex.map(one, range(cfg.S)))
    for j, resp in enumerate(results):
        if resp is None:
            flags.append(f"continuation_lost:w[{j}]")
        else:
            vals[:, j] = resp
    theta = record.allocation.theta
    argmax = np.array([int(np.argmax(theta[:, m])) for m in range(cfg.M)])
    return ElasticityMatrix(values=vals, kind="SS", step=delta,
                            base_N=record.N_star.copy(), base_lam=lam0.copy(),
                            intensity_argmax=argmax, flags=flags)


def rybczynski(cfg: HiveConfig, record: EquilibriumRecord,
               delta: float = DEFAULT_DELTA) -> ElasticityMatrix:
    """Population elasticities with respect to resource endowments."""
    if not (1e-4 <= delta <= 0.5):
        raise ValueError("delta must lie in [1e-4, 0.5]")
    base_N = record.N_star
    vals = np.full((cfg.S, cfg.M), np.nan)
    flags: list[str] = []

    def one(m):
        Rm = cfg.R[m]
        cp = with_param(cfg, f"R[{m}]", Rm * (1 + delta))
        cm = with_param(cfg, f"R[{m}]", Rm * (1 - delta))
        return _pair_response(cp, cm, record, delta,
                              lambda r: r.N_star / np.maximum(base_N, 1e-300))

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        results = list(ex.map(one, range(cfg.M)))
    for m, resp in enumerate(results):
        if resp is None:
            flags.append(f"continuation_lost:R[{m}]")
        else:
            vals[:, m] = resp
    theta = record.allocation.theta
    argmax = np.array([int(np.argmax(theta[:, m])) for m in range(cfg.M)])
    return ElasticityMatrix(values=vals, kind="RB", step=delta,
                            base_N=base_N.copy(),
                            base_lam=record.allocation.lam.copy(),
                            intensity_argmax=argmax, flags=flags)


def implicit_rb(cfg: HiveConfig, record: EquilibriumRecord,
                delta: float = 1e-3) -> np.ndarray:
    """Rybczynski elasticities through the implicit-function identity.

    dN*/dR = -(D_N Phi)^{-1} D_R Phi, with both blocks from central
    finite differences; serves as an independent cross-check of the
    re-solve route.
    """
    from .dynamics import marginal_value

    idx = np.array(record.active_set, dtype=int)
    Ns = record.N_star
    J, _, _ = jacobian_eigen(cfg, record)   # D_N Phi on the active set

    DR = np.empty((idx.size, cfg.M))
    for m in range(cfg.M):
        h = delta * cfg.R[m]
        cp = with_param(cfg, f"R[{m}]", cfg.R[m] + h)
        cm = with_param(cfg, f"R[{m}]", cfg.R[m] - h)
        Vp, _ = marginal_value(cp, Ns)
        Vm, _ = marginal_value(cm, Ns)
        DR[:, m] = Ns[idx] * (Vp[idx] - Vm[idx]) / (2 * h)
    dN = -np.linalg.solve(J, DR)
    # convert to elasticities
    return dN * cfg.R[None, :] / Ns[idx][:, None]


def discrete_shock(cfg: HiveConfig, record: EquilibriumRecord,
                   selector: str, new_value: float):
    """Re-solve after a finite parameter change; returns (record, %dN, %dlam)."""
    cfg2 = with_param(cfg, selector, new_value)
    rec2 = solve_from(cfg2, record.N_star)
    dN = (rec2.N_star - record.N_star) / np.maximum(record.N_star, 1e-300) * 100.0
    dlam = (rec2.allocation.lam - record.allocation.lam) / record.allocation.lam * 100.0
    return rec2, dN, dlam
