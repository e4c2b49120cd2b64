"""Model parameter space: configuration, parsing, validation.

A configuration bundles S agent families and M resource types:
per-family productivity A, maintenance cost c, returns-to-scale
exponent eta, CES substitution elasticity rho, factor shares alpha
(rows sum to one), and the S x S externality matrix gamma (zero
diagonal); plus global preference weights w on the simplex, the CRRA
parameter sigma, resource endowments R, and the population budget B.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, DomainViolation, MalformedDocument

SIMPLEX_TOL = 1e-12


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class HiveConfig:
    """Full parameter vector of the model. Immutable after construction."""

    S: int
    M: int
    A: np.ndarray          # (S,) total factor productivity, > 0
    c: np.ndarray          # (S,) per-agent maintenance cost, > 0
    B: float               # total budget, > 0
    R: np.ndarray          # (M,) resource endowments, > 0
    w: np.ndarray          # (S,) preference weights on the simplex
    sigma: float           # CRRA parameter, > 0 (1.0 selects log utility)
    eta: np.ndarray        # (S,) returns-to-scale exponents, > 0
    rho: np.ndarray        # (S,) CES substitution elasticities, > 0
    alpha: np.ndarray      # (S, M) factor shares, rows sum to 1
    gamma: np.ndarray      # (S, S) externality matrix, zero diagonal
    family_names: tuple[str, ...] = ()
    resource_names: tuple[str, ...] = ()
    start: np.ndarray | None = None       # optional initial population
    gamma_fixed: tuple[tuple[int, int], ...] = ()  # entries pinned under uniform sweeps

    def __post_init__(self):
        for name in ("A", "c", "R", "w", "eta", "rho", "alpha", "gamma"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.start is not None:
            object.__setattr__(self, "start", _readonly(self.start))
        _check(self)

    def centroid(self):
        """Center of the budget simplex: equal spend across families."""
        return self.B / (self.S * self.c)

    def externality_norm(self):
        """Max over families of the summed absolute off-diagonal spillovers."""
        return float(np.max(np.sum(np.abs(self.gamma), axis=1)))


def _check(cfg: HiveConfig):
    S, M = cfg.S, cfg.M
    if S < 1 or M < 1:
        raise DomainViolation("S and M must both be at least 1")
    shapes = {"A": (S,), "c": (S,), "R": (M,), "w": (S,), "eta": (S,),
              "rho": (S,), "alpha": (S, M), "gamma": (S, S)}
    for name, shape in shapes.items():
        got = getattr(cfg, name).shape
        if got != shape:
            raise DimensionMismatch(f"{name}: expected shape {shape}, got {got}")
    for name in ("A", "c", "R", "w", "eta", "rho"):
        v = getattr(cfg, name)
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainViolation(f"{name} must be finite and strictly positive")
    if not (np.isfinite(cfg.B) and cfg.B > 0):
        raise DomainViolation("budget B must be finite and strictly positive")
    if not (np.isfinite(cfg.sigma) and cfg.sigma > 0):
        raise DomainViolation("sigma must be finite and strictly positive")
    if np.any(cfg.alpha <= 0) or not np.all(np.isfinite(cfg.alpha)):
        raise DomainViolation("alpha entries must be finite and strictly positive")
    rows = cfg.alpha.sum(axis=1)
    bad = np.where(np.abs(rows - 1.0) > SIMPLEX_TOL)[0]
    if bad.size:
        raise DomainViolation(
            f"alpha row {bad[0]} sums to {rows[bad[0]]:.17g}, expected 1")
    if abs(float(cfg.w.sum()) - 1.0) > SIMPLEX_TOL:
        raise DomainViolation(f"w sums to {float(cfg.w.sum()):.17g}, expected 1")
    if not np.all(np.isfinite(cfg.gamma)):
        raise DomainViolation("gamma entries must be finite")
    if np.any(np.diag(cfg.gamma) != 0.0):
        raise DomainViolation("gamma diagonal must be exactly zero")
    if cfg.start is not None:
        if cfg.start.shape != (S,):
            raise DimensionMismatch("start must have length S")
        if np.any(cfg.start < 0) or not np.all(np.isfinite(cfg.start)):
            raise DomainViolation("start populations must be finite and nonnegative")
    for (j, k) in cfg.gamma_fixed:
        if not (0 <= j < S and 0 <= k < S) or j == k:
            raise DomainViolation(f"gamma_fixed entry ({j},{k}) out of range")


@dataclass(frozen=True)
class ValidationReport:
    """Standing-assumption diagnostics for a parsed config."""

    ok: bool
    externality_norm: float
    weak_ext_bound: float
    weak_ext_satisfied: bool
    weak_ext_applicable: bool
    eta_max: float
    budget_feasible_nonempty: bool
    messages: tuple[str, ...]


def parse_config(document, renormalize: bool = False) -> HiveConfig:
    """Build a HiveConfig from a JSON document (str, path-like, or dict).

    With renormalize=True, preference weights and alpha rows that miss
    their unit sums are rescaled instead of rejected.
    """
    if isinstance(document, dict):
        doc = document
    else:
        text = document
        try:
            if hasattr(text, "read_text"):
                text = text.read_text(encoding="utf-8")
            elif isinstance(text, str) and "\n" not in text and text.strip().endswith(".json"):
                with open(text, encoding="utf-8") as fh:
                    text = fh.read()
            doc = json.loads(text)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedDocument(str(exc)) from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be an object")
    try:
        families = doc["families"]
        resources = doc["resources"]
        w = np.asarray(doc["preferences"], dtype=float)
        sigma = float(doc["sigma"])
        budget = float(doc["budget"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"missing or malformed top-level key: {exc}") from exc
    if not families or not resources:
        raise MalformedDocument("families and resources must be non-empty lists")
    S, M = len(families), len(resources)
    if w.ndim != 1 or w.size != S:
        raise DimensionMismatch(f"preferences has length {w.size}, expected S={S}")

    def pull(rec, key, idx):
        try:
            return rec[key]
        except (KeyError, TypeError) as exc:
            raise MalformedDocument(f"family {idx} missing key {key!r}") from exc

    A = np.array([float(pull(f, "A", i)) for i, f in enumerate(families)])
    c = np.array([float(pull(f, "c", i)) for i, f in enumerate(families)])
    eta = np.array([float(pull(f, "eta", i)) for i, f in enumerate(families)])
    rho = np.array([float(pull(f, "rho", i)) for i, f in enumerate(families)])
    alpha_rows, gamma_rows = [], []
    for i, f in enumerate(families):
        arow = np.asarray(pull(f, "alpha", i), dtype=float)
        grow = np.asarray(pull(f, "gamma", i), dtype=float)
        if arow.size != M:
            raise DimensionMismatch(f"family {i} alpha has length {arow.size}, expected M={M}")
        if grow.size != S:
            raise DimensionMismatch(f"family {i} gamma has length {grow.size}, expected S={S}")
        alpha_rows.append(arow)
        gamma_rows.append(grow)
    alpha = np.vstack(alpha_rows)
    gamma = np.vstack(gamma_rows)
    try:
        R = np.array([float(r["R"]) for r in resources])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"malformed resource record: {exc}") from exc

    if renormalize:
        if w.sum() > 0:
            w = w / w.sum()
        sums = alpha.sum(axis=1, keepdims=True)
        alpha = np.where(sums > 0, alpha / sums, alpha)

    start = None
    if "start" in doc and doc["start"] is not None:
        start = np.asarray(doc["start"], dtype=float)
    gamma_fixed = tuple(tuple(int(i) for i in pair) for pair in doc.get("gamma_fixed", ()))
    fam_names = tuple(str(f.get("name", f"family_{i}")) for i, f in enumerate(families))
    res_names = tuple(str(r.get("name", f"resource_{m}")) for m, r in enumerate(resources))
    return HiveConfig(S=S, M=M, A=A, c=c, B=budget, R=R, w=w, sigma=sigma,
                      eta=eta, rho=rho, alpha=alpha, gamma=gamma,
                      family_names=fam_names, resource_names=res_names,
                      start=start, gamma_fixed=gamma_fixed)


def serialize_config(cfg: HiveConfig) -> str:
    """Inverse of parse_config, exact to the double-precision values held."""
    doc = {
        "sigma": cfg.sigma,
        "budget": cfg.B,
        "preferences": cfg.w.tolist(),
        "resources": [
            {"name": cfg.resource_names[m] if cfg.resource_names else f"resource_{m}",
             "R": float(cfg.R[m])} for m in range(cfg.M)
        ],
        "families": [
            {"name": cfg.family_names[j] if cfg.family_names else f"family_{j}",
             "A": float(cfg.A[j]), "c": float(cfg.c[j]),
             "eta": float(cfg.eta[j]), "rho": float(cfg.rho[j]),
             "alpha": cfg.alpha[j].tolist(), "gamma": cfg.gamma[j].tolist()}
            for j in range(cfg.S)
        ],
    }
    if cfg.start is not None:
        doc["start"] = cfg.start.tolist()
    if cfg.gamma_fixed:
        doc["gamma_fixed"] = [list(p) for p in cfg.gamma_fixed]
    return json.dumps(doc, indent=2)


def validate(cfg: HiveConfig) -> ValidationReport:
    """Check the standing assumptions; reports, never raises.

    The weak-externality bound (1 - eta_max) / (1 + sigma * eta_max)
    guarantees a concave optimized-welfare landscape; with eta_max >= 1
    the bound is meaningless and the check is reported as inapplicable
    (the multiplicity regime) rather than failed.
    """
    norm = cfg.externality_norm()
    eta_max = float(cfg.eta.max())
    messages = []
    applicable = eta_max < 1.0
    if applicable:
        bound = (1.0 - eta_max) / (1.0 + cfg.sigma * eta_max)
        satisfied = norm < bound
        if not satisfied:
            messages.append(
                f"externality norm {norm:.6g} exceeds weak bound {bound:.6g}; "
                "multiple equilibria become possible")
    else:
        bound = 0.0
        satisfied = False
        messages.append(
            f"eta_max = {eta_max:.6g} >= 1: weak-externality check inapplicable "
            "(increasing returns; multiplicity regime)")
    nonempty = bool(cfg.B > 0)       # c > 0 and B > 0 make the budget set nonempty
    if cfg.start is not None:
        util = float(np.dot(cfg.c, cfg.start)) / cfg.B
        if util > 1.0:
            messages.append(f"start population uses {util:.3g}x the budget")
    return ValidationReport(
        ok=not messages or (applicable and satisfied),
        externality_norm=norm,
        weak_ext_bound=bound,
        weak_ext_satisfied=bool(applicable and satisfied),
        weak_ext_applicable=applicable,
        eta_max=eta_max,
        budget_feasible_nonempty=nonempty,
        messages=tuple(messages),
    )


# ---------------------------------------------------------------------------
# Scalar parameter selectors ("gamma[1,0]", "eta[0]", "w[3]", "R[1]", "B").
# Used by the continuation scan, the sweep axes, and shock handling.

def get_param(cfg: HiveConfig, selector: str) -> float:
    kind, idx = _parse_selector(selector)
    if kind == "B":
        return cfg.B
    if kind == "gamma":
        return float(cfg.gamma[idx])
    return float(getattr(cfg, kind)[idx])


def with_param(cfg: HiveConfig, selector: str, value: float) -> HiveConfig:
    """New config with one scalar entry replaced.

    Preference changes renormalize the remaining weights proportionally
    so that w stays on the simplex. A bare "gamma" selector sets every
    off-diagonal entry uniformly, skipping pairs listed in gamma_fixed.
    """
    kind, idx = _parse_selector(selector)
    if kind == "B":
        return replace(cfg, B=float(value))
    if kind == "w":
        j = idx[0]
        w = cfg.w.copy()
        old = w[j]
        if not (0.0 < value < 1.0):
            raise DomainViolation(f"w[{j}] = {value} must lie strictly inside (0, 1)")
        scale = (1.0 - value) / (1.0 - old)
        w = w * scale
        w[j] = value
        w = w / w.sum()
        return replace(cfg, w=w)
    if kind == "gamma":
        g = cfg.gamma.copy()
        if idx is None:  # uniform externality sweep
            fixed = set(cfg.gamma_fixed)
            for j in range(cfg.S):
                for k in range(cfg.S):
                    if j != k and (j, k) not in fixed:
                        g[j, k] = value
        else:
            g[idx] = value
        return replace(cfg, gamma=g)
    arr = getattr(cfg, kind).copy()
    arr[idx] = value
    return replace(cfg, **{kind: arr})


def _parse_selector(selector: str):
    s = selector.strip()
    if s == "B":
        return "B", None
    if s == "gamma":
        return "gamma", None
    if "[" not in s or not s.endswith("]"):
        raise DomainViolation(f"bad parameter selector {selector!r}")
    kind, rest = s.split("[", 1)
    kind = kind.strip()
    if kind not in ("gamma", "eta", "w", "R", "A", "c", "rho"):
        raise DomainViolation(f"unknown parameter kind {kind!r}")
    parts = rest[:-1].split(",")
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise DomainViolation(f"bad selector index in {selector!r}") from exc
    if kind == "gamma":
        if len(idx) != 2:
            raise DomainViolation("gamma selector needs two indices, e.g. gamma[1,0]")
        return kind, idx
    if len(idx) != 1:
        raise DomainViolation(f"{kind} selector needs one index")
    return kind, idx
