"""Local HTTP service with session-scoped incremental teaching.

Each session wraps one reshaped system. Mutations (new demonstrations,
controller reset) are serialized per session and bump a monotone revision
counter; every response carries the revision it reflects. Intended as a
localhost backend for the drawing UI, not a public API.

Status codes: 400 malformed body or query, 404 unknown session, 409
stale expect_revision, 422 dimension mismatch, 500 numerical failure.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import sim
from .dataset import estimate_velocities
from .gp import DEFAULT_HYPER, Hyperparameters, NumericalError
from .reshaper import ClockParams, Demonstration, ReshapedSystem
from .systems import DimensionMismatchError, NonFiniteInputError, from_dict as system_from_dict


class SchemaError(ValueError):
    """Request body or query string does not match the documented schema."""


class RevisionConflict(Exception):
    def __init__(self, current):
        self.current = current


def _require(body, key, types):
    if key not in body:
        raise SchemaError(f"missing required key {key!r}")
    if not isinstance(body[key], types):
        raise SchemaError(f"key {key!r} has wrong type")
    return body[key]


def _parse_demo(body) -> Demonstration:
    samples = _require(body, "samples", dict)
    t = _require(samples, "t", list)
    pos = _require(samples, "positions", list)
    vel = samples.get("velocities")
    try:
        t = np.asarray(t, dtype=float)
        pos = np.atleast_2d(np.asarray(pos, dtype=float))
        vel = (np.atleast_2d(np.asarray(vel, dtype=float)) if vel is not None
               else estimate_velocities(t, pos))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"samples are not numeric arrays: {exc}") from None
    try:
        return Demonstration(t, pos, vel, name=str(body.get("name", "")))
    except DimensionMismatchError:
        raise
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


class Session:
    """One teaching session: a reshaped system plus its mutation history."""

    def __init__(self, sid: str, rs: ReshapedSystem):
        self.id = sid
        self.rs = rs
        self.revision = 0
        self.demos = []
        self.lock = threading.RLock()

    def check_revision(self, body):
        expect = body.get("expect_revision")
        if expect is not None and expect != self.revision:
            raise RevisionConflict(self.revision)

    def snapshot(self) -> dict:
        rs = self.rs
        try:
            original = rs.original.to_dict()
        except ValueError:
            original = {"kind": rs.original.kind, "dimension": rs.dimension,
                        "goal": rs.goal.tolist(), "parameters": None}
        return {
            "id": self.id,
            "revision": self.revision,
            "dimension": rs.dimension,
            "goal": rs.goal.tolist(),
            "original": original,
            "clock": rs.clock.to_dict(),
            "cbar": rs.cbar,
            "hyper": rs.controller.hyper.to_dict(),
            "gas_guaranteed": rs.gas_guaranteed,
            "controller_points": rs.controller.size,
            "demos": list(self.demos),
        }


class SessionStore:
    def __init__(self):
        self._sessions = {}
        self._lock = threading.Lock()

    def create(self, rs: ReshapedSystem) -> Session:
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, rs)
        with self._lock:
            self._sessions[sid] = session
        return session

    def get(self, sid: str) -> Session | None:
        with self._lock:
            return self._sessions.get(sid)

    def delete(self, sid: str) -> bool:
        with self._lock:
            return self._sessions.pop(sid, None) is not None


def _session_from_body(body) -> ReshapedSystem:
    if "model" in body:
        try:
            return ReshapedSystem.from_dict(_require(body, "model", dict))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad model document: {exc}") from None
    original_doc = _require(body, "original", dict)
    clock_doc = _require(body, "clock", dict)
    cbar = _require(body, "cbar", (int, float))
    try:
        original = system_from_dict(original_doc)
        clock = ClockParams(float(clock_doc["tf"]),
                            float(clock_doc.get("alpha", 10.0)))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad system or clock document: {exc}") from None
    hyper = DEFAULT_HYPER
    if "hyper" in body:
        h = _require(body, "hyper", dict)
        try:
            hyper = Hyperparameters(h["sk2"], h["l"], h["sn2"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad hyper document: {exc}") from None
    return ReshapedSystem(original, clock, float(cbar), hyper=hyper)


def _rollout_config(body, rs) -> sim.RolloutConfig:
    cfg = body.get("config", {})
    if not isinstance(cfg, dict):
        raise SchemaError("config must be an object")
    perturbations = []
    for h in cfg.get("holds", []):
        perturbations.append(sim.Hold(float(h["t_start"]), float(h["duration"])))
    for ev in cfg.get("set_states", []):
        perturbations.append(sim.SetState(float(ev["t"]), tuple(ev["x"])))
    tol = cfg.get("goal_tolerance")
    if tol is None:
        pts = rs.controller.inputs
        diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) if pts.size else 0.0
        tol = 1e-3 * diag if diag > 0 else 1e-3
    try:
        return sim.RolloutConfig(
            dt=float(cfg.get("dt", 0.005)),
            max_time=float(cfg.get("max_time", rs.clock.t_f + 10.0)),
            goal_tolerance=float(tol),
            integrator=str(cfg.get("integrator", "rk4")),
            perturbations=tuple(perturbations),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise SchemaError(f"bad rollout config: {exc}") from None


_SESSION_RE = re.compile(r"^/sessions/([0-9a-f]+)(/[a-z]+)?$")


class TeachingHandler(BaseHTTPRequestHandler):
    server_version = "dsreshape"
    protocol_version = "HTTP/1.1"

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt, *args):
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    def _send(self, code: int, payload: dict):
        data = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _error(self, code: int, message: str, **extra):
        self._send(code, {"error": message, **extra})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON body: {exc.msg}") from None
        if not isinstance(body, dict):
            raise SchemaError("body must be a JSON object")
        return body

    def _dispatch(self, method: str):
        try:
            self._route(method)
        except RevisionConflict as exc:
            self._error(409, "revision conflict; retry against the current state",
                        revision=exc.current)
        except SchemaError as exc:
            self._error(400, str(exc))
        except (DimensionMismatchError, NonFiniteInputError) as exc:
            self._error(422, str(exc))
        except NumericalError as exc:
            self._error(500, f"numerical failure: {exc}")
        except BrokenPipeError:
            pass

    def do_POST(self):
        self._dispatch("POST")

    def do_GET(self):
        self._dispatch("GET")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- routes -------------------------------------------------------------

    def _route(self, method: str):
        url = urlparse(self.path)
        if url.path == "/sessions" and method == "POST":
            return self._create_session()
        m = _SESSION_RE.match(url.path)
        if not m:
            return self._error(404, f"no such route: {url.path}")
        session = self.server.store.get(m.group(1))
        if session is None:
            return self._error(404, f"unknown session {m.group(1)!r}")
        tail = m.group(2)
        handlers = {
            ("GET", None): self._get_session,
            ("GET", "/field"): self._get_field,
            ("POST", "/demonstrations"): self._post_demonstration,
            ("POST", "/rollout"): self._post_rollout,
            ("POST", "/save"): self._post_save,
            ("DELETE", "/controller"): self._delete_controller,
        }
        handler = handlers.get((method, tail))
        if handler is None:
            return self._error(404, f"no such route: {method} {url.path}")
        return handler(session, url)

    def _create_session(self):
        rs = _session_from_body(self._body())
        session = self.server.store.create(rs)
        self._send(201, {"id": session.id, "revision": session.revision})

    def _get_session(self, session, url):
        with session.lock:
            self._send(200, session.snapshot())

    def _post_demonstration(self, session, url):
        body = self._body()
        demo = _parse_demo(body)
        with session.lock:
            session.check_revision(body)
            result = session.rs.learn_increment(demo)
            session.revision += 1
            session.demos.append({
                "name": demo.name,
                "samples": len(demo),
                "accepted": result.accepted,
                "rejected": result.rejected,
                "revision": session.revision,
            })
            self._send(200, {
                "accepted": result.accepted,
                "rejected": result.rejected,
                "revision": session.revision,
            })

    def _get_field(self, session, url):
        q = parse_qs(url.query)

        def scalar(name, default=None):
            if name not in q:
                if default is None:
                    raise SchemaError(f"missing query parameter {name!r}")
                return default
            try:
                return float(q[name][0])
            except ValueError:
                raise SchemaError(f"query parameter {name!r} is not a number") from None

        def vector(name):
            if name not in q:
                raise SchemaError(f"missing query parameter {name!r}")
            try:
                return [float(v) for v in q[name][0].split(",")]
            except ValueError:
                raise SchemaError(f"query parameter {name!r} is not a vector") from None

        s = scalar("s", 1.0)
        if not 0.0 <= s <= 1.0:
            raise SchemaError(f"s must lie in [0, 1], got {s}")
        bounds = vector("bounds")
        if len(bounds) % 2 != 0:
            raise SchemaError("bounds wants lo,hi pairs per axis")
        res = [int(v) for v in vector("res")]
        with session.lock:
            try:
                grid = sim.vector_field_grid(session.rs, s,
                                             np.asarray(bounds).reshape(-1, 2), res)
            except ValueError as exc:
                raise SchemaError(str(exc)) from None
            payload = grid.to_dict()
            payload["revision"] = session.revision
            self._send(200, payload)

    def _post_rollout(self, session, url):
        body = self._body()
        start = _require(body, "start", list)
        with session.lock:
            cfg = _rollout_config(body, session.rs)
            traj = sim.rollout(session.rs, np.asarray(start, dtype=float), cfg)
            payload = traj.to_dict()
            payload["revision"] = session.revision
            self._send(200, payload)

    def _post_save(self, session, url):
        body = self._body()
        path = Path(str(body.get("path") or f"session-{session.id}.json"))
        with session.lock:
            path.write_text(json.dumps(session.rs.to_dict()) + "\n")
            self._send(200, {"path": str(path), "revision": session.revision})

    def _delete_controller(self, session, url):
        with session.lock:
            session.rs.controller.reset()
            session.demos.clear()
            session.revision += 1
            self._send(200, {"revision": session.revision})


def make_server(host: str = "127.0.0.1", port: int = 0,
                verbose: bool = False) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), TeachingHandler)
    server.store = SessionStore()
    server.verbose = verbose
    return server


def serve_forever(host: str, port: int):
    server = make_server(host, port, verbose=True)
    print(f"teaching service listening on http://{host}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
