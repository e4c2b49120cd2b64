"""Population dynamics: marginal values, trajectory integration,
welfare-monotonicity verification, and the projected fixed-point map.

Populations follow dN_j/dt = V_j(N) * N_j, a selection dynamic whose
fitness V_j is the marginal value of one more agent in family j at the
optimized allocation: direct returns through the within-family scale
exponent, minus the maintenance cost. Families with positive value
grow, negative shrink; stationary points with the boundary sign
condition are the equilibria handled in the equilibrium module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocator import Allocation, solve_inner
from .errors import AllocationFailure, HiveError
from .model import HiveConfig

EXTINCTION_FLOOR = 1e-9
CONVERGENCE_EPS = 1e-10
CONVERGENCE_RUN = 10


@dataclass(frozen=True)
class PopulationState:
    N: np.ndarray
    t: float


@dataclass
class Trajectory:
    """Time-ordered record of one integration run."""

    t: np.ndarray              # (T,)
    N: np.ndarray              # (T, S)
    V: np.ndarray              # (T, S)
    welfare: np.ndarray        # (T,)
    budget_utilization: np.ndarray  # (T,)
    events: list[tuple[float, str]] = field(default_factory=list)

    def final(self) -> PopulationState:
        return PopulationState(N=self.N[-1].copy(), t=float(self.t[-1]))


def marginal_value(cfg: HiveConfig, N, alloc: Allocation | None = None,
                   lam0=None):
    """Marginal value vector V(N) and the allocation it was read from.

    V_j = w_j u'(Y_j) * eta_j * Y_j / N_j - c_j for active families
    (the power-law derivative of output in own population, valued at
    the optimal allocation). At N_j = 0 the entry value is signed by
    the returns exponent: +inf sentinel below eta_j = 1 (vanishing
    populations have exploding per-agent product), -c_j at or above.
    """
    N = np.asarray(N, dtype=float)
    if alloc is None and np.any(N > 0):
        try:
            alloc = solve_inner(cfg, N, lam0=lam0)
        except HiveError as exc:
            raise AllocationFailure(str(exc)) from exc
    sig = cfg.sigma
    V = np.empty(cfg.S)
    for j in range(cfg.S):
        if N[j] <= 0.0:
            V[j] = np.inf if cfg.eta[j] < 1.0 else -cfg.c[j]
            continue
        y = alloc.Y[j]
        if y <= 0.0:
            # spillover factor collapsed: no product, pure cost
            V[j] = -cfg.c[j]
            continue
        V[j] = cfg.w[j] * y ** (1.0 - sig) * cfg.eta[j] / N[j] - cfg.c[j]
    return V, alloc


def drift(cfg: HiveConfig, N, lam0=None):
    """Right-hand side Phi(N) = V(N) * N with zeros held at zero."""
    V, alloc = marginal_value(cfg, N, lam0=lam0)
    phi = np.where(np.asarray(N) > 0, np.nan_to_num(V, posinf=0.0) * N, 0.0)
    if alloc is None:
        from .allocator import welfare_at
        alloc = _DeadState(W_star=welfare_at(cfg, N, np.zeros((cfg.S, cfg.M))),
                           lam=np.zeros(cfg.M))
    return phi, V, alloc


@dataclass(frozen=True)
class _DeadState:
    """Stand-in allocation for a fully extinct population."""
    W_star: float
    lam: np.ndarray


def integrate(cfg: HiveConfig, N0, step: float, horizon: float,
              cap_mode: bool = False) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta on the selection dynamic.

    Populations are clamped at zero from below; a family falling under
    the extinction floor is frozen at zero for the remainder (event
    "extinct:j"). With cap_mode each accepted step is projected back
    onto the budget set. Early stop after a sustained run of vanishing
    drift (event "converged"). A failed allocation inside a stage
    triggers one step halving, then aborts with the partial trajectory
    (event "aborted").
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be at least one step")
    N = np.asarray(N0, dtype=float).copy()
    if np.any(N < 0):
        raise ValueError("N0 must be nonnegative")
    initial_cap = False
    if cap_mode:
        capped0 = project_budget(N, cfg.c, cfg.B, floor=0.0)
        initial_cap = not np.array_equal(capped0, N)
        N = capped0
    n_steps = int(round(horizon / step))
    S = cfg.S
    ts = np.empty(n_steps + 1)
    Ns = np.empty((n_steps + 1, S))
    Vs = np.empty((n_steps + 1, S))
    Ws = np.empty(n_steps + 1)
    Us = np.empty(n_steps + 1)
    events: list[tuple[float, str]] = []
    if initial_cap:
        events.append((0.0, "capped"))
    lam = None
    over_budget = False
    quiet = 0

    def record(i, t, N, V, W):
        ts[i] = t
        Ns[i] = N
        Vs[i] = np.nan_to_num(V, posinf=np.inf)
        Ws[i] = W
        Us[i] = float(np.dot(cfg.c, N)) / cfg.B

    phi, V, alloc = drift(cfg, N, lam0=lam)
    lam = alloc.lam if alloc.lam.any() else None
    record(0, 0.0, N, V, alloc.W_star)
    t = 0.0
    count = 1
    for i in range(n_steps):
        h = step
        for attempt in range(2):
            try:
                k1, _, a1 = drift(cfg, N, lam0=lam)
                k2, _, _ = drift(cfg, np.maximum(N + 0.5 * h * k1, 0.0), lam0=lam)
                k3, _, _ = drift(cfg, np.maximum(N + 0.5 * h * k2, 0.0), lam0=lam)
                k4, _, _ = drift(cfg, np.maximum(N + h * k3, 0.0), lam0=lam)
                break
            except HiveError:
                if attempt == 0:
                    h *= 0.5
                    events.append((t, "step_halved"))
                else:
                    events.append((t, "aborted"))
                    return _trim(ts, Ns, Vs, Ws, Us, count, events)
        N = np.maximum(N + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        for j in range(S):
            if 0.0 < N[j] < EXTINCTION_FLOOR:
                N[j] = 0.0
                events.append((t + h, f"extinct:{j}"))
        if cap_mode:
            capped = project_budget(N, cfg.c, cfg.B, floor=0.0)
            if not np.allclose(capped, N, rtol=0, atol=0):
                if not any(e[1] == "capped" for e in events):
                    events.append((t + h, "capped"))
                N = capped
        t += h
        try:
            phi, V, alloc = drift(cfg, N, lam0=lam)
        except HiveError:
            events.append((t, "aborted"))
            return _trim(ts, Ns, Vs, Ws, Us, count, events)
        lam = alloc.lam if alloc.lam.any() else None
        record(count, t, N, V, alloc.W_star)
        count += 1
        util = float(np.dot(cfg.c, N)) / cfg.B
        if util > 1.0 and not over_budget and not cap_mode:
            over_budget = True
            events.append((t, "budget_exceeded"))
        if np.max(N) > 1e9:
            events.append((t, "diverged"))
            return _trim(ts, Ns, Vs, Ws, Us, count, events)
        if np.max(np.abs(phi)) < CONVERGENCE_EPS:
            quiet += 1
            if quiet >= CONVERGENCE_RUN:
                events.append((t, "converged"))
                break
        else:
            quiet = 0
    return _trim(ts, Ns, Vs, Ws, Us, count, events)


def _trim(ts, Ns, Vs, Ws, Us, count, events):
    return Trajectory(t=ts[:count].copy(), N=Ns[:count].copy(),
                      V=Vs[:count].copy(), welfare=Ws[:count].copy(),
                      budget_utilization=Us[:count].copy(), events=events)


@dataclass(frozen=True)
class LyapunovReport:
    max_mismatch: float        # worst |dW/dt - sum V_j^2 N_j| over interior samples
    max_decrease: float        # most negative single-step welfare change
    nondecreasing: bool
    identity_rhs_final: float  # sum V_j^2 N_j at the last state


def lyapunov_check(cfg: HiveConfig, traj: Trajectory,
                   decrease_tol: float = 1e-9) -> LyapunovReport:
    """Compare the welfare slope along a trajectory with sum_j V_j^2 N_j.

    The rate identity holds exactly for externality-free configs, where
    the fitness is the welfare gradient; a welfare decrease beyond
    tolerance in that regime is a defect.
    """
    t, W = traj.t, traj.welfare
    V, N = traj.V, traj.N
    mism = 0.0
    for i in range(1, len(t) - 1):
        slope = (W[i + 1] - W[i - 1]) / (t[i + 1] - t[i - 1])
        rhs = float(np.sum(np.square(V[i]) * N[i]))
        mism = max(mism, abs(slope - rhs))
    dW = np.diff(W)
    max_dec = float(dW.min()) if dW.size else 0.0
    rhs_final = float(np.sum(np.square(V[-1]) * N[-1]))
    return LyapunovReport(max_mismatch=mism, max_decrease=max_dec,
                          nondecreasing=bool(max_dec >= -decrease_tol),
                          identity_rhs_final=rhs_final)


def project_budget(x, c, B, floor=0.0):
    """Exact projection onto {N >= floor, c . N <= B} by bisection.

    Single-multiplier KKT structure: the projection is
    max(floor, x - mu c) with mu = 0 when unconstrained, otherwise the
    unique root of c . max(floor, x - mu c) = B.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    lo_point = np.maximum(x, floor)
    if float(np.dot(c, lo_point)) <= B:
        return lo_point
    if float(np.dot(c, np.full_like(x, floor))) > B:
        raise ValueError("budget set is empty at this floor")

    def spend(mu):
        return float(np.dot(c, np.maximum(x - mu * c, floor))) - B

    hi = 1.0
    while spend(hi) > 0:
        hi *= 2.0
        if hi > 1e30:
            raise ValueError("projection bisection failed to bracket")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spend(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-18 * max(1.0, hi):
            break
    return np.maximum(x - hi * c, floor)


def fixed_point_iterate(cfg: HiveConfig, eps: float, N0,
                        tol: float = 1e-10, max_iter: int = 100_000):
    """Projected Euler fixed-point map N -> proj(N + eps Phi(N)).

    The projection is onto the eps-truncated budget set
    {N >= eps, c . N <= B}. A fixed point is an equilibrium candidate
    up to the truncation. Returns (N, converged, iterations).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if float(np.dot(cfg.c, np.full(cfg.S, eps))) > cfg.B:
        raise ValueError("eps-truncated budget set is empty")
    N = project_budget(np.asarray(N0, dtype=float), cfg.c, cfg.B, floor=eps)
    lam = None
    for it in range(max_iter):
        phi, _, alloc = drift(cfg, N, lam0=lam)
        lam = alloc.lam if alloc.lam.any() else None
        nxt = project_budget(N + eps * phi, cfg.c, cfg.B, floor=eps)
        delta = float(np.max(np.abs(nxt - N)))
        N = nxt
        if delta < tol:
            return N, True, it + 1
    return N, False, max_iter
