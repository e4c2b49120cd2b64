"""Local spectral analysis of steady states: Jacobian assembly by
central differences, eigenvalue classification, a Gershgorin-style
sufficient stability test, natural-continuation scanning for complex
pairs crossing the imaginary axis, and empirical limit-cycle detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import integrate, marginal_value
from .equilibrium import EquilibriumRecord, solve_from
from .errors import FDFailure, HiveError, NoConvergence
from .model import HiveConfig, with_param

EIG_TOL = 1e-8
JAC_STEP = 1e-6
ALPHA_BISECT_TOL = 1e-8

STABLE_NODE = "stable-node"
STABLE_SPIRAL = "stable-spiral"
UNSTABLE = "unstable"
SADDLE = "saddle"
CENTER_CANDIDATE = "center-candidate"


@dataclass(frozen=True)
class StabilityClass:
    tag: str
    leading_pair: complex       # eigenvalue with maximal real part
    spectral_abscissa: float


def classify_eigenvalues(eig: np.ndarray) -> StabilityClass:
    """Tag a spectrum.

    All real parts negative gives stable-node or stable-spiral by the
    leading pair's imaginary part; a leading complex pair with positive
    real part is unstable (spiral-out); positive and negative real
    eigenvalues mixed give a saddle; a leading real part at zero within
    tolerance is a center candidate.
    """
    lead = eig[np.argmax(eig.real)]
    abscissa = float(eig.real.max())
    if abs(abscissa) <= EIG_TOL:
        tag = CENTER_CANDIDATE
    elif abscissa < -EIG_TOL:
        tag = STABLE_SPIRAL if abs(lead.imag) > EIG_TOL else STABLE_NODE
    else:
        if abs(lead.imag) > EIG_TOL or eig.real.min() > -EIG_TOL:
            tag = UNSTABLE
        else:
            tag = SADDLE
    return StabilityClass(tag=tag, leading_pair=complex(lead),
                          spectral_abscissa=abscissa)


def jacobian_eigen(cfg: HiveConfig, record: EquilibriumRecord,
                   step: float = JAC_STEP):
    """Fill a record with J, its spectrum, and a stability tag.

    J_jk = N_j * dV_j/dN_k on the active set, by central differences
    with a relative step. Eigenvalues come from the dense nonsymmetric
    QR solver. Returns (J, eigenvalues, StabilityClass); the record is
    updated in place.
    """
    idx = np.array(record.active_set, dtype=int)
    Ns = record.N_star
    n = idx.size
    DV = np.empty((n, n))
    lam0 = record.allocation.lam if record.allocation.lam.any() else None
    for k in range(n):
        h = step * Ns[idx[k]]
        Np = Ns.copy()
        Nm = Ns.copy()
        Np[idx[k]] += h
        Nm[idx[k]] -= h
        try:
            Vp, _ = marginal_value(cfg, Np, lam0=lam0)
            Vm, _ = marginal_value(cfg, Nm, lam0=lam0)
        except HiveError as exc:
            raise FDFailure(f"allocation failed at a Jacobian probe: {exc}") from exc
        DV[:, k] = (Vp[idx] - Vm[idx]) / (2 * h)
    J = Ns[idx][:, None] * DV
    eig, vecs = np.linalg.eig(J)
    cls = classify_eigenvalues(eig)
    record.jacobian = J
    record.eigenvalues = eig
    record.stability = cls.tag
    return J, eig, cls


@dataclass(frozen=True)
class StabilityConditionReport:
    holds: bool
    eta_max: float
    lhs: float                 # externality norm * max population
    rhs: float                 # min over families of |dV_j/dN_j| * N_j
    gershgorin_left: bool      # every disk strictly in the left half-plane
    disk_centers: np.ndarray
    disk_radii: np.ndarray


def sufficient_stability(cfg: HiveConfig, record: EquilibriumRecord
                         ) -> StabilityConditionReport:
    """Evaluate the decay-dominates-spillover sufficient condition.

    Requires eta_max < 1 and that the externality pressure (infinity
    norm of the spillover matrix times the largest population) stays
    below the weakest family's own-decay speed |dV_j/dN_j| N_j. Also
    reports the Gershgorin disks of J for the same story told
    spectrally.
    """
    if record.jacobian is None:
        jacobian_eigen(cfg, record)
    J = record.jacobian
    idx = np.array(record.active_set, dtype=int)
    eta_max = float(cfg.eta.max())
    lhs = cfg.externality_norm() * float(record.N_star[idx].max())
    rhs = float(np.min(np.abs(np.diag(J))))
    centers = np.diag(J).copy()
    radii = np.abs(J).sum(axis=1) - np.abs(np.diag(J))
    gersh = bool(np.all(centers + radii < 0))
    return StabilityConditionReport(
        holds=bool(eta_max < 1.0 and lhs < rhs and np.all(np.diag(J) < 0)),
        eta_max=eta_max, lhs=lhs, rhs=rhs, gershgorin_left=gersh,
        disk_centers=centers, disk_radii=radii)


@dataclass
class HopfResult:
    param_name: str
    found: bool
    p_critical: float | None
    alpha_slope: float | None      # d Re(leading pair) / dp at the crossing
    omega: float | None            # |Im| of the pair at the crossing
    period_estimate: float | None  # 2 pi / omega
    branch: list[tuple[float, np.ndarray, complex]] = field(default_factory=list)
    branch_lost: bool = False
    critical_record: EquilibriumRecord | None = None


def _leading_complex(eig, vecs, prev_vec):
    """Pick the tracked eigenpair: by eigenvector overlap with the
    previous step when available, otherwise the complex pair with the
    largest real part (falling back to the leading eigenvalue)."""
    order = np.argsort(-eig.real)
    if prev_vec is not None and prev_vec.size == vecs.shape[0]:
        overlaps = np.abs(vecs.conj().T @ prev_vec)
        k = int(np.argmax(overlaps))
    else:
        k = None
        for i in order:
            if abs(eig[i].imag) > EIG_TOL:
                k = int(i)
                break
        if k is None:
            k = int(order[0])
    return eig[k], vecs[:, k]


def _eig_with_vectors(cfg, rec):
    jacobian_eigen(cfg, rec)
    eig, vecs = np.linalg.eig(rec.jacobian)
    return eig, vecs


def hopf_scan(cfg: HiveConfig, param: str, lo: float, hi: float,
              steps: int = 20, N0=None) -> HopfResult:
    """Natural continuation of an equilibrium branch over one parameter,
    tracking the leading complex pair by eigenvector overlap, with
    bisection to the real-part crossing and a finite-difference
    transversality slope.

    The scan reports NoCrossing (found=False) when the tracked pair's
    real part never changes sign; losing the equilibrium branch midway
    returns the partial branch with branch_lost set.
    """
    result = HopfResult(param_name=param, found=False, p_critical=None,
                        alpha_slope=None, omega=None, period_estimate=None)
    grid = np.linspace(lo, hi, max(2, steps))
    warm = np.asarray(N0, dtype=float) if N0 is not None else None
    prev_vec = None
    prev = None   # (p, alpha, record)

    def solve_at(p, start, anchored=False):
        """Equilibrium at parameter value p. Without an anchor, fall back
        to rescaled starts; anchored solves (bisection, transversality)
        stay on the warm start so the branch cannot hop basins."""
        c2 = with_param(cfg, param, p)
        start = np.asarray(start, dtype=float)
        trials = (start, 0.5 * start, 2.0 * start, cfg.centroid())
        last = None
        for trial in trials:
            try:
                rec = solve_from(c2, np.asarray(trial, dtype=float))
            except HiveError as exc:
                last = exc
                continue
            if anchored:
                scale = np.maximum(np.abs(start), 1e-12)
                if np.max(np.abs(rec.N_star - start) / scale) > 1.5:
                    last = NoConvergence("continuation left the branch")
                    continue
            eig, vecs = _eig_with_vectors(c2, rec)
            return rec, eig, vecs
        raise last

    for p in grid:
        start = warm if warm is not None else cfg.centroid()
        try:
            rec, eig, vecs = solve_at(p, start, anchored=prev is not None)
        except HiveError:
            result.branch_lost = prev is not None
            if prev is None:
                continue
            break
        lead, vec = _leading_complex(eig, vecs, prev_vec)
        prev_vec = vec
        warm = rec.N_star.copy()
        result.branch.append((float(p), rec.N_star.copy(), complex(lead)))
        alpha = lead.real
        if prev is not None and np.sign(alpha) != np.sign(prev[1]) and prev[1] != 0.0:
            p_lo, a_lo, rec_lo = prev
            p_hi, a_hi = float(p), alpha
            start_bis = rec_lo.N_star.copy()
            vec_bis = prev_vec
            for _ in range(80):
                mid = 0.5 * (p_lo + p_hi)
                try:
                    rec_m, eig_m, vecs_m = solve_at(mid, start_bis)
                except HiveError:
                    result.branch_lost = True
                    break
                lead_m, vec_bis = _leading_complex(eig_m, vecs_m, vec_bis)
                start_bis = rec_m.N_star.copy()
                if abs(lead_m.real) < ALPHA_BISECT_TOL:
                    break
                if np.sign(lead_m.real) == np.sign(a_lo):
                    p_lo, a_lo = mid, lead_m.real
                else:
                    p_hi, a_hi = mid, lead_m.real
            else:
                mid = 0.5 * (p_lo + p_hi)
            result.found = True
            result.p_critical = float(mid)
            result.omega = abs(lead_m.imag)
            result.period_estimate = (2 * np.pi / result.omega
                                      if result.omega > 0 else None)
            result.critical_record = rec_m
            # transversality by central FD over +-1% of the critical value
            dp = 0.01 * max(abs(mid), 0.01 * (hi - lo))
            try:
                _, eig_p, vecs_p = solve_at(mid + dp, rec_m.N_star)
                lp, _ = _leading_complex(eig_p, vecs_p, vec_bis)
                _, eig_q, vecs_q = solve_at(mid - dp, rec_m.N_star)
                lq, _ = _leading_complex(eig_q, vecs_q, vec_bis)
                result.alpha_slope = float((lp.real - lq.real) / (2 * dp))
            except HiveError:
                result.alpha_slope = None
            return result
        prev = (float(p), alpha, rec)
    return result


@dataclass(frozen=True)
class CycleInfo:
    found: bool
    period: float | None
    amplitude: np.ndarray | None       # per-family peak-to-peak over the tail
    convergence_ratio: float | None    # successive cycle-amplitude ratio


def detect_limit_cycle(cfg: HiveConfig, record: EquilibriumRecord,
                       perturbation: float = 0.02, periods: int = 20,
                       dt: float = 0.01, max_horizon: float = 2000.0) -> CycleInfo:
    """Integrate from a perturbed unstable spiral and measure the
    attractor empirically.

    The start point displaces the equilibrium along the real part of
    the leading eigenvector. The period comes from upward mean
    crossings of the most strongly oscillating family over the second
    half of the run; the cycle counts as found when late peak-to-peak
    amplitudes agree within five percent.
    """
    none = CycleInfo(found=False, period=None, amplitude=None,
                     convergence_ratio=None)
    if record.eigenvalues is None:
        jacobian_eigen(cfg, record)
    eig = record.eigenvalues
    lead = eig[np.argmax(eig.real)]
    if lead.real <= 0 or abs(lead.imag) < EIG_TOL:
        return none  # perturbations decay or leave along a real direction
    period_guess = 2 * np.pi / abs(lead.imag)
    eigv, vecs = np.linalg.eig(record.jacobian)
    k = int(np.argmax(eigv.real))
    direction = np.real(vecs[:, k])
    direction = direction / np.max(np.abs(direction))
    idx = np.array(record.active_set, dtype=int)
    N0 = record.N_star.copy()
    N0[idx] = np.maximum(N0[idx] * (1 + perturbation * direction), 1e-6)
    horizon = min(max(periods, 20) * period_guess, max_horizon)
    try:
        traj = integrate(cfg, N0, step=dt, horizon=horizon)
    except HiveError:
        return none
    if any(lbl == "aborted" for _, lbl in traj.events):
        return none
    half = len(traj.t) // 2
    tail_t = traj.t[half:]
    tail_N = traj.N[half:]
    if tail_N.shape[0] < 10 or np.max(tail_N) > 1e4:
        return none
    spread = tail_N.max(axis=0) - tail_N.min(axis=0)
    fam = int(np.argmax(spread))
    if spread[fam] < 1e-7:
        return none
    sig = tail_N[:, fam] - tail_N[:, fam].mean()
    ups = []
    for i in range(1, sig.size):
        if sig[i - 1] < 0 <= sig[i]:
            frac = -sig[i - 1] / (sig[i] - sig[i - 1])
            ups.append(tail_t[i - 1] + frac * (tail_t[i] - tail_t[i - 1]))
    if len(ups) < 4:
        return none
    intervals = np.diff(ups)
    period = float(np.mean(intervals[-3:]))
    # per-cycle peak-to-peak amplitudes of the reference family
    amps = []
    for a, b in zip(ups[:-1], ups[1:]):
        m = (tail_t >= a) & (tail_t < b)
        if m.sum() > 2:
            amps.append(tail_N[m, fam].max() - tail_N[m, fam].min())
    if len(amps) < 3:
        return none
    ratios = [amps[i + 1] / amps[i] for i in range(len(amps) - 1) if amps[i] > 0]
    last = ratios[-3:]
    stable_amp = all(0.95 <= r <= 1.05 for r in last)
    amplitude = tail_N[(tail_t >= ups[-3])].max(axis=0) - \
        tail_N[(tail_t >= ups[-3])].min(axis=0)
    return CycleInfo(found=bool(stable_amp), period=period,
                     amplitude=amplitude,
                     convergence_ratio=float(last[-1]) if last else None)
