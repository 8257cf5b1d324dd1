"""Live session service: one scenario stepped in real time over WebSockets.

The stepping loop is the same :class:`~armsteer.simulator.Simulation` used by
headless runs; clients only inject intents and commands. Intents are
zero-order-held, expire after a TTL (safety default when a client vanishes),
and the latest one wins at each step boundary. Every applied per-step intent
is recorded, so a session's trace replays headless to identical telemetry.

Wire protocol (newline-free JSON per message, all carrying session_id/seq):

    state:   {type, session_id, seq, t, step, q, x, x_d, e, d, z_hat, z_true,
              V, null_residual, flags, paused}
    intent:  {type:"intent", session_id, seq, mode:"slider", d:[n]}
             {type:"intent", session_id, seq, mode:"cartesian_drag",
              joint:j, vec:[3], gain}
    command: {type:"command", session_id, seq,
              action:"pause"|"resume"|"reset"|"set_target", target?:[2]}
    ack / error: replies; the hello ack carries the robot description.
"""

from __future__ import annotations

import asyncio
import contextlib
import csv
import io
import json
import secrets
import time
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import ConfigurationError
from .kinematics import joint_point_jacobian
from .simulator import Simulation
from .telemetry import TelemetryLog

DEFAULT_INTENT_TTL_S = 0.5
BROADCAST_QUEUE_SIZE = 128
DRAG_DAMPING = 1e-6


def map_cartesian_drag(robot, q, joint_index: int, vec, gain: float):
    """Project a Cartesian drag of joint ``joint_index`` into joint efforts.

    The command velocity gain*vec is pulled back through the position
    Jacobian of that joint's origin (joints 1..j only); joints past the
    dragged one stay untouched. Near-singular chains fall back to the damped
    inverse (flagged).
    """
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ConfigurationError("drag vector must be a finite 3-vector")
    d = np.zeros(robot.n)
    if not vec.any():
        return d, False
    J_j = joint_point_jacobian(robot, q, joint_index)
    # Structural rank deficiency is normal here (the dragged joint's own
    # column is zero), so truncate exact-zero modes silently and damp only
    # genuinely small ones.
    U, s, Vt = np.linalg.svd(J_j, full_matrices=False)
    keep = s > max(s[0], 1.0) * 1e-12
    damped = bool(np.any(keep & (s < DRAG_DAMPING)))
    if damped:
        inv_s = np.where(keep, s / (s**2 + DRAG_DAMPING**2), 0.0)
    else:
        inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    d[:joint_index] = (Vt.T * inv_s) @ U.T @ (gain * vec)
    return d, damped


class SessionError(Exception):
    """Inbound message rejected; the session itself survives."""


class Session:
    """Owns the stepping loop, intent state, recording, and client fan-out."""

    def __init__(self, scenario, decimation: int = 1, pace: float = 1.0,
                 intent_ttl_s: float = DEFAULT_INTENT_TTL_S):
        self.scenario = scenario
        self.sim = Simulation(scenario)
        self.session_id = secrets.token_hex(8)
        self.decimation = max(1, int(decimation))
        self.pace = pace
        self.ttl_steps = max(1, round(intent_ttl_s / scenario.sim.dt))
        self.paused = False
        self.seq = 0
        self.telemetry = TelemetryLog()
        self.trace: list[np.ndarray] = []
        self._intent: Optional[dict] = None
        self._clients: list[asyncio.Queue] = []
        self._last_seq_in: dict[int, int] = {}

    # -- intent & command handling (called from socket handlers) ----------

    def submit_intent(self, msg: dict) -> None:
        mode = msg.get("mode")
        if mode == "slider":
            d = np.asarray(msg.get("d", []), dtype=float)
            if d.shape != (self.sim.n,) or not np.all(np.isfinite(d)):
                raise SessionError(f"slider intent needs a finite d[{self.sim.n}]")
            self._intent = {"mode": "slider", "d": d, "step": self.sim.k}
        elif mode == "cartesian_drag":
            joint = msg.get("joint")
            if not isinstance(joint, int) or not 1 <= joint <= self.sim.n:
                raise SessionError(f"joint must be an integer in 1..{self.sim.n}")
            vec = np.asarray(msg.get("vec", []), dtype=float)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise SessionError("vec must be a finite 3-vector")
            gain = float(msg.get("gain", 1.0))
            self._intent = {"mode": "cartesian_drag", "joint": joint, "vec": vec,
                            "gain": gain, "step": self.sim.k}
        else:
            raise SessionError(f"unknown intent mode {mode!r}")

    def submit_command(self, msg: dict) -> dict:
        action = msg.get("action")
        if action == "pause":
            self.paused = True
        elif action == "resume":
            self.paused = False
        elif action == "reset":
            self.sim.reset()
            self._intent = None
            self.telemetry = TelemetryLog()
            self.trace = []
        elif action == "set_target":
            target = msg.get("target")
            if (not isinstance(target, (list, tuple)) or len(target) != 2
                    or not all(np.isfinite(target))):
                raise SessionError("set_target needs target:[u, v]")
            self.sim.set_target(np.asarray(target, dtype=float))
        else:
            raise SessionError(f"unknown command action {action!r}")
        return {"action": action, "ok": True}

    def _resolve_intent(self) -> np.ndarray:
        if self._intent is None:
            return np.zeros(self.sim.n)
        if self.sim.k - self._intent["step"] > self.ttl_steps:
            self._intent = None  # stale command never latches
            return np.zeros(self.sim.n)
        if self._intent["mode"] == "slider":
            return self._intent["d"]
        d, _ = map_cartesian_drag(self.scenario.robot, self.sim.q,
                                  self._intent["joint"], self._intent["vec"],
                                  self._intent["gain"])
        return d

    # -- stepping & broadcast ---------------------------------------------

    def step_once(self) -> Optional[dict]:
        """One simulation step; returns the state message if due for broadcast."""
        d = self._resolve_intent()
        rec = self.sim.step(d)
        self.trace.append(d)
        self.telemetry.append(rec)
        if (self.sim.k - 1) % self.decimation:
            return None
        return self.state_message(rec)

    def state_message(self, rec) -> dict:
        self.seq += 1
        return {
            "type": "state",
            "session_id": self.session_id,
            "seq": self.seq,
            "t": rec.t,
            "step": self.sim.k - 1,
            "q": rec.q.tolist(),
            "x": rec.x.tolist(),
            "x_d": rec.x_d.tolist(),
            "e": rec.e.tolist(),
            "d": rec.d.tolist(),
            "u": rec.u.tolist(),
            "u_N": rec.u_N.tolist(),
            "z_hat": rec.z_hat,
            "z_true": rec.z_true,
            "V": rec.V,
            "null_residual": rec.null_residual,
            "flags": {
                "depth_clamped": rec.depth_clamped,
                "jac_damped": rec.jac_damped,
                "img_damped": rec.img_damped,
            },
            "paused": self.paused,
        }

    def hello_message(self) -> dict:
        self.seq += 1
        scn = self.scenario
        return {
            "type": "ack",
            "session_id": self.session_id,
            "seq": self.seq,
            "action": "hello",
            "robot": {
                "n": scn.robot.n,
                "dh": [{"a": r.a, "alpha": r.alpha, "d": r.d, "theta": r.theta}
                       for r in scn.robot.dh],
                "feature_offset": scn.robot.feature_offset.tolist(),
                "name": scn.robot.name,
            },
            "image_size": list(scn.camera.image_size),
            "dt": scn.sim.dt,
            "target": scn.effective_dict()["target"],
            "scenario": scn.name,
        }

    def attach(self) -> asyncio.Queue:
        queue = asyncio.Queue(maxsize=BROADCAST_QUEUE_SIZE)
        self._clients.append(queue)
        return queue

    def detach(self, queue: asyncio.Queue) -> None:
        with contextlib.suppress(ValueError):
            self._clients.remove(queue)

    def broadcast(self, message: dict) -> None:
        payload = json.dumps(message)
        for queue in self._clients:
            if queue.full():  # drop-oldest: never block the stepping loop
                with contextlib.suppress(asyncio.QueueEmpty):
                    queue.get_nowait()
            with contextlib.suppress(asyncio.QueueFull):
                queue.put_nowait(payload)

    async def loop(self) -> None:
        dt_wall = self.scenario.sim.dt * self.pace
        next_deadline = time.monotonic() + dt_wall
        while True:
            if not self.paused:
                message = self.step_once()
                if message is not None:
                    self.broadcast(message)
            if dt_wall > 0:
                delay = next_deadline - time.monotonic()
                next_deadline += dt_wall
                if delay > 0:
                    await asyncio.sleep(delay)
                    continue
                if delay < -1.0:  # fell far behind; re-anchor instead of bursting
                    next_deadline = time.monotonic() + dt_wall
            # behind schedule or free-running: still yield to client I/O
            await asyncio.sleep(0)

    # -- recording ----------------------------------------------------------

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["step"] + [f"d{i}" for i in range(self.sim.n)])
        for k, d in enumerate(self.trace):
            writer.writerow([k] + [repr(float(v)) for v in d])
        return buf.getvalue()

    def write_outputs(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.telemetry.to_csv(out / "telemetry.csv")
        (out / "intent_trace.csv").write_text(self.trace_csv())
        (out / "effective_config.yaml").write_text(self.scenario.echo_yaml())


def create_app(scenario, decimation: int = 1, pace: float = 1.0,
               out_dir=None, ui_dir=None,
               intent_ttl_s: float = DEFAULT_INTENT_TTL_S) -> FastAPI:
    session = Session(scenario, decimation=decimation, pace=pace,
                      intent_ttl_s=intent_ttl_s)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(session.loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
            if out_dir is not None:
                session.write_outputs(out_dir)

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/config")
    def get_config():
        return session.scenario.effective_dict()

    @app.websocket("/ws")
    async def ws_endpoint(socket: WebSocket):
        await socket.accept()
        await socket.send_text(json.dumps(session.hello_message()))
        queue = session.attach()
        client_id = id(socket)

        async def pump():
            while True:
                await socket.send_text(await queue.get())

        sender = asyncio.create_task(pump())
        try:
            while True:
                raw = await socket.receive_text()
                reply = handle_inbound(session, raw, client_id)
                if reply is not None:
                    await socket.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            session.detach(queue)
            session._last_seq_in.pop(client_id, None)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def handle_inbound(session: Session, raw: str, client_id: int) -> Optional[dict]:
    """Validate and apply one client message; returns the reply, if any."""

    def error(message):
        session.seq += 1
        return {"type": "error", "session_id": session.session_id,
                "seq": session.seq, "message": message}

    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as err:
        return error(f"malformed JSON: {err}")
    if not isinstance(msg, dict):
        return error("message must be a JSON object")
    if msg.get("session_id") != session.session_id:
        return error("missing or mismatched session_id")
    seq = msg.get("seq")
    if not isinstance(seq, int):
        return error("missing integer seq")
    last = session._last_seq_in.get(client_id)
    if last is not None and seq <= last:
        return error(f"stale seq {seq} (last {last})")
    session._last_seq_in[client_id] = seq

    kind = msg.get("type")
    try:
        if kind == "intent":
            session.submit_intent(msg)
            return None
        if kind == "command":
            result = session.submit_command(msg)
            session.seq += 1
            return {"type": "ack", "session_id": session.session_id,
                    "seq": session.seq, **result}
    except SessionError as err:
        return error(str(err))
    return error(f"unknown message type {kind!r}")


def serve(scenario, host: str = "127.0.0.1", port: int = 8732,
          decimation: int = 1, out_dir=None, ui_dir=None,
          pace: float = 1.0) -> None:
    """Run the session service until interrupted."""
    import uvicorn

    app = create_app(scenario, decimation=decimation, pace=pace,
                     out_dir=out_dir, ui_dir=ui_dir)
    print(f"session service on ws://{host}:{port}/ws "
          f"(scenario {scenario.name!r}, {1 / scenario.sim.dt:.0f} Hz)")
    uvicorn.run(app, host=host, port=port, log_level="warning")
