"""Inner resource-allocation problem.

At fixed populations the orchestrator maximizes aggregate welfare over
the resource assignment K subject to per-resource totals. Strict
monotonicity of the CES aggregates makes every resource constraint
bind, so the maximizer is characterized by market-clearing shadow
prices: given prices, each family's optimal expenditure and conditional
demands have closed forms, and a damped Newton iteration on log-prices
drives the M market-clearing residuals to zero. A projected-gradient
primal ascent serves as fallback for pathological elasticities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoActiveFamily, SolverDivergence, TooLarge
from .model import HiveConfig

CLEARING_TOL = 1e-12       # target relative market-clearing residual
CLEARING_ACCEPT = 1e-10    # residual above this is a solver failure
MAX_NEWTON = 100
MAX_HALVINGS = 30
RESTARTS = 3

NEG_INF = float("-inf")


@dataclass
class Allocation:
    """Solution of the inner problem at one population vector."""

    K: np.ndarray            # (S, M) resource assignments
    lam: np.ndarray          # (M,) shadow prices
    Y: np.ndarray            # (S,) family outputs
    W_star: float            # optimized welfare
    theta: np.ndarray        # (S, M) factor-intensity shares
    residual: float          # max relative market-clearing residual
    foc_residual: float      # max relative first-order-condition residual
    active: np.ndarray       # (S,) bool, families included in the allocation
    finite: bool             # False when welfare is the -inf sentinel


def _log_scale(cfg: HiveConfig, N: np.ndarray, active: np.ndarray) -> np.ndarray:
    """log of B_j = A_j * N_j^eta_j * prod_{k != j} N_k^gamma_jk.

    Zero populations are taken literally: a partner at zero with a
    positive spillover exponent drives the factor to zero (log -> -inf),
    with a negative exponent to +inf.
    """
    with np.errstate(divide="ignore"):
        logN = np.where(N > 0, np.log(np.where(N > 0, N, 1.0)), -np.inf)
    ext = np.zeros(cfg.S)
    for j in range(cfg.S):
        row = cfg.gamma[j]
        t = 0.0
        dead = False
        for k in range(cfg.S):
            if k == j or row[k] == 0.0:
                continue
            if np.isfinite(logN[k]):
                t += row[k] * logN[k]
            elif row[k] > 0:
                dead = True   # a vanished booster annihilates the product
            else:
                t = np.inf    # a vanished congester blows it up
        ext[j] = -np.inf if dead else t
    own = np.where(active, cfg.eta * np.where(np.isfinite(logN), logN, 0.0), 0.0)
    return np.log(cfg.A) + own + ext


def _unit_cost_shares(cfg: HiveConfig, lam: np.ndarray, idx: np.ndarray):
    """CES unit-cost index P_j(lam) and cost shares omega_jm for families idx."""
    n = idx.size
    P = np.empty(n)
    omega = np.empty((n, cfg.M))
    with np.errstate(all="ignore"):
        for i, j in enumerate(idx):
            r = cfg.rho[j]
            a = cfg.alpha[j]
            if abs(r - 1.0) < 1e-12:
                P[i] = np.prod((lam / a) ** a)
                omega[i] = a
            else:
                z = a ** r * lam ** (1.0 - r)
                Z = z.sum()
                P[i] = Z ** (1.0 / (1.0 - r))
                omega[i] = z / Z
    return P, omega


def _demands(cfg, lam, idx, Bj):
    """Expenditures, demands and residual at prices lam for families idx."""
    P, omega = _unit_cost_shares(cfg, lam, idx)
    sig = cfg.sigma
    w = cfg.w[idx]
    with np.errstate(all="ignore"):
        if sig == 1.0:
            E = w.copy()
        else:
            E = (w ** (1.0 / sig) * Bj[idx] ** ((1.0 - sig) / sig)
                 * P ** ((sig - 1.0) / sig))
        K = E[:, None] * omega / lam[None, :]
    r = K.sum(axis=0) - cfg.R
    return P, omega, E, K, r


def _newton_prices(cfg, idx, Bj, x0):
    """Damped Newton on log-prices; returns (x, relres) or None."""
    sig = cfg.sigma
    rho = cfg.rho[idx]
    coef = (sig - 1.0) / sig + rho - 1.0
    x = x0.copy()
    P, omega, E, K, r = _demands(cfg, np.exp(x), idx, Bj)

    def newton_dx():
        J = np.einsum("jm,j,jn->mn", K, coef, omega)
        J[np.diag_indices(cfg.M)] -= np.einsum("jm,j->m", K, rho)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx = -r / np.diag(J)
        return dx

    for _ in range(MAX_NEWTON):
        rel = np.max(np.abs(r) / cfg.R)
        if rel < CLEARING_TOL:
            # one extra full step so warm and cold starts land on the
            # same prices to machine precision (keeps replay bit-stable)
            dx = newton_dx()
            if np.all(np.isfinite(dx)):
                Pt, ot, Et, Kt, rt = _demands(cfg, np.exp(x + dx), idx, Bj)
                if np.all(np.isfinite(rt)) and \
                        np.max(np.abs(rt) / cfg.R) <= rel:
                    x, r = x + dx, rt
                    rel = np.max(np.abs(r) / cfg.R)
            return x, rel
        dx = newton_dx()
        if not np.all(np.isfinite(dx)):
            return None
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = x + t * dx
            Pt, ot, Et, Kt, rt = _demands(cfg, np.exp(trial), idx, Bj)
            if np.all(np.isfinite(rt)) and np.max(np.abs(rt) / cfg.R) < rel:
                x, P, omega, E, K, r = trial, Pt, ot, Et, Kt, rt
                break
            t *= 0.5
        else:
            rel = np.max(np.abs(r) / cfg.R)
            return (x, rel) if rel < CLEARING_ACCEPT else None
    rel = np.max(np.abs(r) / cfg.R)
    return (x, rel) if rel < CLEARING_ACCEPT else None


def _gradient_fallback(cfg, idx, Bj, iters=20000):
    """Projected gradient ascent on K with per-resource simplex projection."""
    n = idx.size
    K = np.tile(cfg.R / n, (n, 1))
    step = 0.1 * np.min(cfg.R)
    w = cfg.w[idx]
    sig = cfg.sigma
    last = -np.inf
    for _ in range(iters):
        F = np.array([_ces(cfg, j, K[i]) for i, j in enumerate(idx)])
        Y = Bj[idx] * F
        G = np.empty_like(K)
        for i, j in enumerate(idx):
            dF = _ces_grad(cfg, j, K[i], F[i])
            up = w[i] * Y[i] ** (-sig) * Bj[j] if sig != 1.0 else w[i] / max(Y[i], 1e-300) * Bj[j]
            G[i] = up * dF
        cur = _welfare_total(cfg, w, Y, sig)
        Kn = K + step * G
        for m in range(cfg.M):
            Kn[:, m] = _project_simplex(Kn[:, m], cfg.R[m])
        if cur < last:
            step *= 0.5
            if step < 1e-14:
                break
        else:
            K = Kn
            if abs(cur - last) < 1e-15 * max(1.0, abs(cur)):
                break
            last = cur
    return K


def _welfare_total(cfg, w, Y, sig):
    if np.any(Y <= 0):
        return -np.inf
    if sig == 1.0:
        return float(np.sum(w * np.log(Y)))
    return float(np.sum(w * Y ** (1.0 - sig) / (1.0 - sig)))


def _ces(cfg, j, k):
    r = cfg.rho[j]
    a = cfg.alpha[j]
    if np.any(k <= 0):
        if r <= 1.0:
            return 0.0
        s = (r - 1.0) / r
        return float(np.sum(a[k > 0] * k[k > 0] ** s) ** (1.0 / s))
    if abs(r - 1.0) < 1e-12:
        return float(np.prod(k ** a))
    s = (r - 1.0) / r
    return float(np.sum(a * k ** s) ** (1.0 / s))


def _ces_grad(cfg, j, k, F):
    r = cfg.rho[j]
    a = cfg.alpha[j]
    if abs(r - 1.0) < 1e-12:
        return F * a / np.maximum(k, 1e-300)
    s = (r - 1.0) / r
    return a * np.maximum(k, 1e-300) ** (s - 1.0) * F ** (1.0 - s)


def _project_simplex(v, z):
    """Euclidean projection of v onto {x >= 0, sum x = z}."""
    v = np.where(np.isfinite(v), v, 0.0)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    if not cond.any():
        return np.full_like(v, z / v.size)
    rho = ind[cond][-1]
    tau = css[cond][-1] / rho
    return np.maximum(v - tau, 0.0)


def solve_inner(cfg: HiveConfig, N, lam0=None) -> Allocation:
    """Optimal allocation, prices, outputs and welfare at populations N.

    Families at zero population are excluded (zero resources, zero
    output, no utility term); raises NoActiveFamily if all are zero.
    """
    N = np.asarray(N, dtype=float)
    if N.shape != (cfg.S,):
        raise ValueError(f"N must have length {cfg.S}")
    if np.any(N < 0) or not np.all(np.isfinite(N)):
        raise ValueError("N must be finite and nonnegative")
    pos = N > 0
    if not pos.any():
        raise NoActiveFamily("all family populations are zero")
    logB = _log_scale(cfg, N, pos)
    Bj = np.exp(logB)
    # a family whose spillover factor collapsed to zero produces nothing
    active = pos & (Bj > 0) & np.isfinite(Bj)
    idx = np.where(active)[0]
    if idx.size == 0:
        return _empty_allocation(cfg, N, pos)

    x0 = np.log(cfg.w[idx].sum() / cfg.R) if lam0 is None else np.log(np.asarray(lam0, float))
    got = _newton_prices(cfg, idx, Bj, x0)
    tries = 0
    while got is None and tries < RESTARTS:
        tries += 1
        x0p = np.log(cfg.w[idx].sum() / cfg.R) + 0.5 * tries * np.sin(
            np.arange(cfg.M) + tries)
        got = _newton_prices(cfg, idx, Bj, x0p)
    if got is None:
        try:
            Kp = _gradient_fallback(cfg, idx, Bj)
            return _finish_primal(cfg, N, idx, Bj, Kp, pos)
        except (FloatingPointError, ValueError, IndexError) as exc:
            raise SolverDivergence(
                f"dual Newton and primal fallback both failed: {exc}") from exc
    x, rel = got
    lam = np.exp(x)
    P, omega, E, K, r = _demands(cfg, lam, idx, Bj)
    F = E / P
    Yi = Bj[idx] * F
    return _finish(cfg, N, idx, Bj, lam, K, Yi, E, rel, pos)


def _empty_allocation(cfg, N, pos):
    K = np.zeros((cfg.S, cfg.M))
    Y = np.zeros(cfg.S)
    W = _welfare_value(cfg, N, Y, pos)
    finite = np.isfinite(W)
    return Allocation(K=K, lam=np.zeros(cfg.M), Y=Y, W_star=W,
                      theta=np.zeros((cfg.S, cfg.M)), residual=np.inf,
                      foc_residual=np.inf, active=pos & False, finite=finite)


def _welfare_value(cfg, N, Y, pos):
    """Welfare sum with the sigma branch; -inf when an active output is zero."""
    sig = cfg.sigma
    total = -float(np.dot(cfg.c, N))
    for j in np.where(pos)[0]:
        y = Y[j]
        if y <= 0:
            if sig >= 1.0:
                return NEG_INF
            continue  # sigma < 1: u(0) = 0
        total += cfg.w[j] * (np.log(y) if sig == 1.0 else y ** (1.0 - sig) / (1.0 - sig))
    return float(total)


def _finish(cfg, N, idx, Bj, lam, Kact, Yact, Eact, rel, pos):
    S, M = cfg.S, cfg.M
    K = np.zeros((S, M))
    K[idx] = Kact
    Y = np.zeros(S)
    Y[idx] = Yact
    theta = np.zeros((S, M))
    theta[idx] = lam[None, :] * Kact / Eact[:, None]
    foc = _foc_residual(cfg, idx, Bj, K, Y, lam)
    W = _welfare_value(cfg, N, Y, pos)
    act = np.zeros(S, dtype=bool)
    act[idx] = True
    return Allocation(K=K, lam=lam, Y=Y, W_star=W, theta=theta, residual=rel,
                      foc_residual=foc, active=act, finite=np.isfinite(W))


def _finish_primal(cfg, N, idx, Bj, Kact, pos):
    F = np.array([_ces(cfg, j, Kact[i]) for i, j in enumerate(idx)])
    Yact = Bj[idx] * F
    sig = cfg.sigma
    lam_est = np.zeros(cfg.M)
    for i, j in enumerate(idx):
        dF = _ces_grad(cfg, j, Kact[i], F[i])
        up = cfg.w[j] * Yact[i] ** (-sig) * Bj[j]
        lam_est = np.maximum(lam_est, up * dF)
    rel = np.max(np.abs(Kact.sum(axis=0) - cfg.R) / cfg.R)
    if rel > 1e-6:
        raise SolverDivergence("dual Newton and primal fallback both failed")
    E = (lam_est[None, :] * Kact).sum(axis=1)
    return _finish(cfg, N, idx, Bj, lam_est, Kact, Yact, E, rel, pos)


def _foc_residual(cfg, idx, Bj, K, Y, lam):
    """Max relative violation of w u'(Y) B dF/dK = lam over active pairs."""
    sig = cfg.sigma
    worst = 0.0
    for j in idx:
        F = Y[j] / Bj[j] if Bj[j] > 0 else 0.0
        if F <= 0 or Y[j] <= 0:
            return np.inf
        dF = _ces_grad(cfg, j, K[j], F)
        lhs = cfg.w[j] * Y[j] ** (-sig) * Bj[j] * dF
        worst = max(worst, float(np.max(np.abs(lhs - lam) / lam)))
    return worst


def welfare_at(cfg: HiveConfig, N, K) -> float:
    """Welfare of an arbitrary feasible assignment K at populations N.

    Returns -inf (sentinel) when a zero output meets sigma >= 1; callers
    that need a hard error can check math.isinf. Families at zero
    population contribute only their (zero) cost term.
    """
    N = np.asarray(N, dtype=float)
    K = np.asarray(K, dtype=float)
    pos = N > 0
    logB = _log_scale(cfg, N, pos)
    Bj = np.exp(logB)
    Y = np.zeros(cfg.S)
    for j in np.where(pos)[0]:
        Y[j] = Bj[j] * _ces(cfg, j, K[j]) if np.isfinite(Bj[j]) and Bj[j] > 0 else 0.0
    return _welfare_value(cfg, N, Y, pos)


def factor_intensity(cfg: HiveConfig, alloc: Allocation):
    """Factor-intensity shares and each family's most intensive resource.

    theta_jm is the share of resource m in the value of family j's
    output; rows sum to one by the expenditure identity.
    """
    theta = alloc.theta
    argmax = np.full(cfg.S, -1)
    for j in np.where(alloc.active)[0]:
        argmax[j] = int(np.argmax(theta[j]))
    return theta, argmax


def brute_force_inner(cfg: HiveConfig, N, grid_points: int = 16,
                      refinements: int = 2) -> Allocation:
    """Grid-search oracle for solve_inner on small problems.

    Exhaustive product grid over the per-resource allocation simplexes,
    refined twice around the incumbent. Exponential in S*M, guarded.
    """
    N = np.asarray(N, dtype=float)
    pos = N > 0
    if not pos.any():
        raise NoActiveFamily("all family populations are zero")
    idx = np.where(pos)[0]
    n = idx.size
    if n * cfg.M > 6:
        raise TooLarge(f"S*M = {n * cfg.M} exceeds the brute-force guard of 6")
    if grid_points < 16:
        raise ValueError("grid_points must be at least 16")

    logB = _log_scale(cfg, N, pos)
    Bj = np.exp(logB)
    sig = cfg.sigma
    w = cfg.w[idx]

    def column_grids(center, width):
        grids = []
        for m in range(cfg.M):
            lo = np.maximum(center[:, m] - width[m], 0.0)
            axes = [np.linspace(lo[i], min(lo[i] + 2 * width[m], cfg.R[m]), grid_points)
                    for i in range(n - 1)]
            grids.append(axes)
        return grids

    def search(center, width):
        grids = column_grids(center, width)
        best_val, best_K = -np.inf, None

        def rec_col(m, K):
            nonlocal best_val, best_K
            if m == cfg.M:
                F = np.array([_ces(cfg, j, K[i]) for i, j in enumerate(idx)])
                Y = Bj[idx] * F
                val = _welfare_total(cfg, w, Y, sig)
                if val > best_val:
                    best_val, best_K = val, K.copy()
                return
            def rec_row(i, used):
                if i == n - 1:
                    K[i, m] = cfg.R[m] - used
                    if K[i, m] >= 0:
                        rec_col(m + 1, K)
                    return
                for v in grids[m][i]:
                    if used + v <= cfg.R[m] + 1e-12:
                        K[i, m] = v
                        rec_row(i + 1, used + v)
            rec_row(0, 0.0)

        rec_col(0, np.zeros((n, cfg.M)))
        return best_val, best_K

    center = np.tile(cfg.R / n, (n, 1))
    width = cfg.R.astype(float)
    best_val, best_K = search(center, width)
    for _ in range(refinements):
        width = width * (2.0 / grid_points) * 1.5
        val, K = search(best_K, width)
        if val > best_val:
            best_val, best_K = val, K

    F = np.array([_ces(cfg, j, best_K[i]) for i, j in enumerate(idx)])
    Yact = Bj[idx] * F
    E = np.zeros(n)
    lam = np.zeros(cfg.M)
    K = np.zeros((cfg.S, cfg.M))
    K[idx] = best_K
    Y = np.zeros(cfg.S)
    Y[idx] = Yact
    W = _welfare_value(cfg, N, Y, pos)
    act = np.zeros(cfg.S, dtype=bool)
    act[idx] = True
    return Allocation(K=K, lam=lam, Y=Y, W_star=W, theta=np.zeros((cfg.S, cfg.M)),
                      residual=np.max(np.abs(K.sum(axis=0) - cfg.R) / cfg.R),
                      foc_residual=np.inf, active=act, finite=np.isfinite(W))
