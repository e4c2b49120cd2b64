"""Session-oriented steering service.

A session holds a live simulation of one config: advance the dynamics,
preview the predicted effect of a parameter shock (elasticities, the
continued equilibrium, and its stability class) without touching state,
then apply the shock and watch the realized restructuring. Sessions are
in-memory, processed serially per session, with optional append-only
event logs (length-prefixed JSON records) for bit-identical replay.
"""

from __future__ import annotations

import json
import secrets
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .dynamics import integrate, marginal_value
from .equilibrium import find_all, solve_from
from .errors import HiveError
from .model import (HiveConfig, get_param, parse_config, serialize_config,
                    validate, with_param)
from .spectral import jacobian_eigen
from .statics import rybczynski, stolper_samuelson

DEFAULT_DT = 1e-2


class Session:
    def __init__(self, sid: str, cfg: HiveConfig, dt: float, log_path=None):
        self.id = sid
        self.cfg = cfg
        self.dt = dt
        N0 = cfg.start if cfg.start is not None else cfg.centroid()
        self.t = [0.0]
        self.N = [np.asarray(N0, dtype=float)]
        V, alloc = marginal_value(cfg, self.N[0])
        self.V = [np.nan_to_num(V, posinf=np.inf)]
        self.W = [alloc.W_star]
        self.lam = alloc.lam
        self.util = [float(np.dot(cfg.c, self.N[0])) / cfg.B]
        self.status = "running"
        self.shock_log: list[dict] = []
        self.events: list[tuple[float, str]] = []
        self.lock = threading.Lock()
        self.latest_analysis = None
        self.log_path = Path(log_path) if log_path else None
        if self.log_path:
            self.log_path.write_bytes(b"")
            self._log({"op": "create", "config": json.loads(serialize_config(cfg)),
                       "dt": dt})

    def _log(self, record: dict):
        if not self.log_path:
            return
        payload = json.dumps(record, sort_keys=True).encode("utf-8")
        with self.log_path.open("ab") as fh:
            fh.write(str(len(payload)).encode("ascii") + b"\n" + payload)

    def snapshot(self) -> dict:
        lead = None
        abscissa = None
        if self.latest_analysis:
            abscissa = self.latest_analysis.get("spectral_abscissa")
            lead = self.latest_analysis.get("leading_pair")
        return {
            "id": self.id,
            "t": self.t[-1],
            "N": [float(x) for x in self.N[-1]],
            "V": [float(x) if np.isfinite(x) else None for x in self.V[-1]],
            "W_star": self.W[-1],
            "lambda": [float(x) for x in self.lam],
            "budget_utilization": self.util[-1],
            "status": self.status,
            "families": list(self.cfg.family_names),
            "resources": list(self.cfg.resource_names),
            "spectral_abscissa": abscissa,
            "leading_pair": lead,
            "shock_count": len(self.shock_log),
        }

    def advance(self, duration: float) -> dict:
        if duration < 0:
            raise ValueError("duration must be nonnegative")
        if self.status == "diverged":
            raise RuntimeError("session has diverged")
        if duration == 0.0:
            return self.snapshot()
        traj = integrate(self.cfg, self.N[-1], step=self.dt, horizon=duration)
        t0 = self.t[-1]
        for i in range(1, len(traj.t)):
            self.t.append(t0 + traj.t[i])
            self.N.append(traj.N[i])
            self.V.append(traj.V[i])
            self.W.append(traj.welfare[i])
            self.util.append(traj.budget_utilization[i])
        for (te, label) in traj.events:
            self.events.append((t0 + te, label))
            if label == "converged":
                self.status = "converged"
            if label == "aborted" or self.util[-1] > 5.0:
                self.status = "diverged"
        V, alloc = marginal_value(self.cfg, self.N[-1])
        self.lam = alloc.lam
        self._log({"op": "advance", "duration": duration})
        return self.snapshot()

    def _nearest_equilibrium(self):
        N = np.maximum(self.N[-1], 1e-8)
        try:
            return solve_from(self.cfg, N)
        except HiveError:
            pass
        # flow-assisted globalization: ride the dynamics toward the
        # attractor for a while, then polish with Newton
        probe = N
        for _ in range(4):
            try:
                traj = integrate(self.cfg, probe, step=self.dt, horizon=25.0)
                probe = np.maximum(traj.N[-1], 1e-8)
                return solve_from(self.cfg, probe)
            except HiveError:
                continue
        recs = find_all(self.cfg, starts=16, seed=0)
        candidates = [r for r in recs if r.interior] or recs
        if not candidates:
            raise HiveError("no equilibrium found near the current state")
        dist = [float(np.linalg.norm(r.N_star - self.N[-1]))
                for r in candidates]
        return candidates[int(np.argmin(dist))]

    def preview(self, field: str, value: float) -> dict:
        kind = field.split("[")[0]
        if kind not in ("w", "R", "B", "gamma"):
            raise ValueError("shock must target w, R, B, or a gamma entry")
        old = get_param(self.cfg, field)
        new_cfg = with_param(self.cfg, field, float(value))
        validate(new_cfg)
        try:
            base = self._nearest_equilibrium()
        except HiveError as exc:
            raise LookupError(f"no equilibrium near the current state: {exc}")
        prediction = {"field": field, "old": old, "new": float(value)}
        try:
            if kind == "w":
                j = int(field.split("[")[1].rstrip("]"))
                ss = stolper_samuelson(self.cfg, base)
                prediction["elasticities"] = {
                    "kind": "price_wrt_weight",
                    "values": [None if np.isnan(x) else float(x)
                               for x in ss.values[:, j]],
                    "labels": list(self.cfg.resource_names),
                }
            elif kind == "R":
                m = int(field.split("[")[1].rstrip("]"))
                rb = rybczynski(self.cfg, base)
                prediction["elasticities"] = {
                    "kind": "population_wrt_endowment",
                    "values": [None if np.isnan(x) else float(x)
                               for x in rb.values[:, m]],
                    "labels": list(self.cfg.family_names),
                }
            else:
                prediction["elasticities"] = None
        except HiveError:
            prediction["elasticities"] = None
        try:
            shifted = solve_from(new_cfg, base.N_star)
            _, eig, cls = jacobian_eigen(new_cfg, shifted)
            prediction["predicted_equilibrium"] = [float(x) for x in shifted.N_star]
            prediction["predicted_lambda"] = [float(x) for x in
                                              shifted.allocation.lam]
            prediction["regime_flags"] = {
                "stability": cls.tag,
                "spectral_abscissa": cls.spectral_abscissa,
            }
        except HiveError as exc:
            raise LookupError(f"no continued equilibrium under the shock: {exc}")
        return prediction

    def apply(self, field: str, value: float) -> dict:
        prediction = self.preview(field, value)
        old = get_param(self.cfg, field)
        self.cfg = with_param(self.cfg, field, float(value))
        validate(self.cfg)
        entry = {"time": self.t[-1], "field": field, "old": old,
                 "new": float(value), "prediction": prediction}
        self.shock_log.append(entry)
        V, alloc = marginal_value(self.cfg, self.N[-1])
        self.lam = alloc.lam
        self.V[-1] = np.nan_to_num(V, posinf=np.inf)
        self.W[-1] = alloc.W_star
        self.status = "running"
        self._log({"op": "shock", "field": field, "value": float(value),
                   "prediction": prediction})
        return self.snapshot()

    def analyze(self) -> dict:
        try:
            rec = self._nearest_equilibrium()
            _, eig, cls = jacobian_eigen(self.cfg, rec)
        except HiveError as exc:
            raise LookupError(str(exc))
        self.latest_analysis = {
            "N_star": [float(x) for x in rec.N_star],
            "W_star": rec.W_star,
            "lambda": [float(x) for x in rec.allocation.lam],
            "eigenvalues": [[float(e.real), float(e.imag)] for e in eig],
            "stability": cls.tag,
            "spectral_abscissa": cls.spectral_abscissa,
            "leading_pair": [float(cls.leading_pair.real),
                             float(cls.leading_pair.imag)],
            "valid": rec.valid,
        }
        self._log({"op": "analyze"})
        return self.latest_analysis

    def trajectory_since(self, t_from: float) -> dict:
        ts = np.asarray(self.t)
        i0 = int(np.searchsorted(ts, t_from, side="right"))
        return {
            "t": [float(x) for x in self.t[i0:]],
            "N": [[float(x) for x in row] for row in self.N[i0:]],
            "W_star": [float(x) for x in self.W[i0:]],
            "budget_utilization": [float(x) for x in self.util[i0:]],
            "events": [[t, label] for t, label in self.events if t > t_from],
            "status": self.status,
        }


def replay_session(log_path) -> Session:
    """Rebuild a session from its event log by re-running every operation."""
    data = Path(log_path).read_bytes()
    records = []
    pos = 0
    while pos < len(data):
        nl = data.index(b"\n", pos)
        length = int(data[pos:nl])
        payload = data[nl + 1:nl + 1 + length]
        records.append(json.loads(payload))
        pos = nl + 1 + length
    if not records or records[0]["op"] != "create":
        raise ValueError("log does not start with a create record")
    cfg = parse_config(records[0]["config"])
    session = Session("replay", cfg, records[0]["dt"], log_path=None)
    for rec in records[1:]:
        if rec["op"] == "advance":
            session.advance(rec["duration"])
        elif rec["op"] == "shock":
            session.apply(rec["field"], rec["value"])
        elif rec["op"] == "analyze":
            session.analyze()
    return session


def create_app(default_config: Path | None = None,
               log_dir: Path | None = None,
               static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="hive steering service")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(sid: str) -> Session:
        with registry_lock:
            s = sessions.get(sid)
        if s is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return s

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "sessions": len(sessions)}

    @app.post("/sessions")
    def create_session(body: dict):
        try:
            cfg = parse_config(body.get("config", body))
            rep = validate(cfg)
        except HiveError as exc:
            raise HTTPException(status_code=400,
                                detail=f"{type(exc).__name__}: {exc}")
        dt = float(body.get("dt", DEFAULT_DT))
        if dt <= 0:
            raise HTTPException(status_code=400, detail="dt must be positive")
        sid = secrets.token_hex(8)
        log_path = (log_dir / f"{sid}.log") if log_dir else None
        try:
            session = Session(sid, cfg, dt, log_path=log_path)
        except HiveError as exc:
            raise HTTPException(status_code=400,
                                detail=f"initial state failed: {exc}")
        with registry_lock:
            sessions[sid] = session
        out = session.snapshot()
        out["validation"] = {
            "ok": rep.ok, "externality_norm": rep.externality_norm,
            "weak_ext_satisfied": rep.weak_ext_satisfied,
            "messages": list(rep.messages),
        }
        return out

    @app.get("/sessions/{sid}/state")
    def state(sid: str):
        s = get_session(sid)
        with s.lock:
            return s.snapshot()

    @app.post("/sessions/{sid}/advance")
    def advance(sid: str, body: dict):
        s = get_session(sid)
        try:
            duration = float(body.get("duration", 0.0))
        except (TypeError, ValueError):
            raise HTTPException(status_code=400, detail="bad duration")
        with s.lock:
            try:
                return s.advance(duration)
            except RuntimeError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except HiveError as exc:
                raise HTTPException(status_code=500,
                                    detail=f"integration failed: {exc}")

    @app.post("/sessions/{sid}/shock/preview")
    def preview(sid: str, body: dict):
        s = get_session(sid)
        with s.lock:
            try:
                return s.preview(str(body["field"]), float(body["value"]))
            except KeyError:
                raise HTTPException(status_code=400,
                                    detail="body needs field and value")
            except (ValueError, HiveError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except LookupError as exc:
                raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions/{sid}/shock/apply")
    def apply(sid: str, body: dict):
        s = get_session(sid)
        with s.lock:
            try:
                return s.apply(str(body["field"]), float(body["value"]))
            except KeyError:
                raise HTTPException(status_code=400,
                                    detail="body needs field and value")
            except (ValueError, HiveError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except LookupError as exc:
                raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/sessions/{sid}/trajectory")
    def trajectory(sid: str,
                   t_from: float = Query(default=0.0, alias="from")):
        s = get_session(sid)
        with s.lock:
            return s.trajectory_since(t_from)

    @app.post("/sessions/{sid}/analyze")
    def analyze(sid: str):
        s = get_session(sid)
        with s.lock:
            try:
                return s.analyze()
            except LookupError as exc:
                raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/sessions/{sid}/shocks")
    def shocks(sid: str):
        s = get_session(sid)
        with s.lock:
            return {"shock_log": s.shock_log}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(static_dir),
                                          html=True), name="console")

    if default_config is not None:
        @app.get("/default-config")
        def default_cfg():
            return JSONResponse(json.loads(Path(default_config).read_text()))

    return app
