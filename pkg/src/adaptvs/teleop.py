"""Teleoperation bridge: a human steers the simulated catheter over WebSocket.

The session core is pure and network-free: messages are validated as they
arrive (error replies go straight back) but take effect only at the next
tick, with the newest steer winning. Each tick runs the exact same
closed_loop_step as the autonomous harness with the operator's steer
substituted for the P-controller, so adaptation trains on human input the
same way it trains on autonomous motion. That makes scripted replays
deterministic: identical message/tick interleavings yield identical
broadcasts.

Wire protocol (JSON text frames, schema 1):
  server -> client  hello {schema, role}, state {t, target_px, theta_hat,
                    gate_open, error_norm, adaptation_on, alpha, env,
                    features}, error {reason}
  client -> server  steer {dx, dy}, set_adaptation {on}, set_alpha {alpha},
                    set_env {name}, reset {}
The first client becomes the driver; later clients are read-only viewers.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import math
from contextlib import asynccontextmanager
from typing import Any

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .controller import closed_loop_step
from .harness import prepare_trial, trial_rng
from .plant import PRESET_NAMES
from .scenario import Scenario

PROTOCOL_SCHEMA = 1

# A held key streams steer messages at the client frame rate, so a live
# driver refreshes this continuously; once messages stop (release,
# disconnect, tab hidden) the command dies within a third of a second.
STEER_HOLD_TICKS = 10

# RNG stream indices below this are reserved for sweep trials; resets get
# their own streams so a reset session never replays a sweep trial.
_RESET_STREAM_BASE = 10000

_CLIENT_TYPES = ("steer", "set_adaptation", "set_alpha", "set_env", "reset")


def _finite_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _error(reason: str) -> dict:
    return {"type": "error", "reason": reason}


class TeleopSession:
    """Authoritative simulation state plus the tick-boundary command queue."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.adaptation_on = True
        self.reset_count = 0
        self.env_name = scenario.environment_name
        self._steer = np.zeros(2)
        self._steer_age = STEER_HOLD_TICKS  # no recent command
        self._queue: list[dict] = []
        self._last_row = None
        self.state, self.est, self.ctx = prepare_trial(scenario, trial_rng(scenario.seed, 0))

    @property
    def tick_rate(self) -> float:
        return self.scenario.camera.frame_rate

    def apply_message(self, msg: Any) -> dict | None:
        """Validate and queue one client message; returns an error reply or None.

        Nothing mutates simulation state here; accepted commands take effect
        at the next tick boundary.
        """
        if not isinstance(msg, dict) or "type" not in msg:
            return _error("message must be an object with a 'type' field")
        mtype = msg["type"]
        if mtype not in _CLIENT_TYPES:
            return _error(f"unknown message type {mtype!r}")

        if mtype == "steer":
            if not (_finite_number(msg.get("dx")) and _finite_number(msg.get("dy"))):
                return _error("steer needs finite numeric dx, dy")
        elif mtype == "set_adaptation":
            if not isinstance(msg.get("on"), bool):
                return _error("set_adaptation needs boolean 'on'")
        elif mtype == "set_alpha":
            alpha = msg.get("alpha")
            if not _finite_number(alpha) or not (0.0 < alpha <= 1.0):
                return _error("set_alpha needs alpha in (0, 1]")
        elif mtype == "set_env":
            if msg.get("name") not in PRESET_NAMES:
                return _error(f"unknown environment; valid: {', '.join(PRESET_NAMES)}")
        self._queue.append(msg)
        return None

    def _apply_queued(self) -> None:
        steer: dict | None = None
        for msg in self._queue:
            mtype = msg["type"]
            if mtype == "steer":
                steer = msg  # latest wins
            elif mtype == "set_adaptation":
                self.adaptation_on = msg["on"]
            elif mtype == "set_alpha":
                self.ctx.estimator = dataclasses.replace(
                    self.ctx.estimator, alpha=float(msg["alpha"])
                )
            elif mtype == "set_env":
                self._set_env(msg["name"])
            elif mtype == "reset":
                self._reset()
        self._queue.clear()
        if steer is not None:
            self._steer = np.array([float(steer["dx"]), float(steer["dy"])])
            self._steer_age = 0

    def _set_env(self, name: str) -> None:
        # theta_hat is kept deliberately: the operator watches re-adaptation
        from .plant import preset

        self.env_name = name
        self.ctx.swap_disturbance(preset(name).disturbance)
        self.state = dataclasses.replace(self.state, phi_current=self.ctx.disturbance.phi_at(self.state.t))

    def _reset(self) -> None:
        """Fresh plant + estimator, same scenario, new RNG stream.

        Operator settings (adaptation toggle, alpha, chosen environment)
        survive; only the simulated state starts over.
        """
        self.reset_count += 1
        rng = trial_rng(self.scenario.seed, _RESET_STREAM_BASE + self.reset_count)
        alpha = self.ctx.estimator.alpha
        self.state, self.est, self.ctx = prepare_trial(self.scenario, rng)
        self.ctx.estimator = dataclasses.replace(self.ctx.estimator, alpha=alpha)
        if self.env_name != self.scenario.environment_name:
            self._set_env(self.env_name)
        self._steer = np.zeros(2)
        self._steer_age = STEER_HOLD_TICKS
        self._last_row = None

    def tick_once(self) -> dict:
        """Drain the queue, advance one step, and return the state broadcast."""
        self._apply_queued()
        if self._steer_age >= STEER_HOLD_TICKS:
            self._steer = np.zeros(2)
        steer = self._steer
        self._steer_age += 1
        self.state, self.est, row = closed_loop_step(
            self.state,
            self.est,
            self.ctx,
            pixel_cmd_override=steer,
            apply_correction=self.adaptation_on,
            update_estimator=self.adaptation_on,
        )
        self._last_row = row
        return self.state_message()

    def state_message(self) -> dict:
        if self._last_row is not None:
            error_norm = self._last_row.error_norm_px
            gate_open = self._last_row.gate_open
        else:
            error_norm = float(np.hypot(*(self.state.target_px - self.ctx.camera.center)))
            gate_open = False
        return {
            "type": "state",
            "t": self.state.t,
            "target_px": [float(self.state.target_px[0]), float(self.state.target_px[1])],
            "theta_hat": self.est.theta_hat,
            "gate_open": bool(gate_open),
            "error_norm": float(error_norm),
            "adaptation_on": self.adaptation_on,
            "alpha": self.ctx.estimator.alpha,
            "env": self.env_name,
            "features": [[float(x), float(y)] for x, y in self.state.features_px],
        }


def encode(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


def replay(scenario: Scenario, log: list[tuple[int, dict]], ticks: int) -> list[dict]:
    """Re-run a scripted session: log entries are (tick_index, message).

    Test utility backing the determinism property: the same log always
    produces the same broadcast sequence.
    """
    session = TeleopSession(scenario)
    by_tick: dict[int, list[dict]] = {}
    for tick, msg in log:
        by_tick.setdefault(tick, []).append(msg)
    broadcasts = []
    for t in range(ticks):
        for msg in by_tick.get(t, []):
            session.apply_message(msg)
        broadcasts.append(session.tick_once())
    return broadcasts


def create_app(scenario: Scenario, auto_tick: bool = True, ui_dir: str | None = None) -> FastAPI:
    """FastAPI app exposing one session at /ws; optionally serves the console UI."""
    session = TeleopSession(scenario)
    clients: dict[Any, str] = {}  # websocket -> role
    lock = asyncio.Lock()

    async def tick_loop() -> None:
        period = 1.0 / session.tick_rate
        while True:
            await asyncio.sleep(period)
            async with lock:
                state = session.tick_once()
                targets = list(clients)
            text = encode(state)
            for ws in targets:
                try:
                    await ws.send_text(text)
                except Exception:  # noqa: BLE001  slow/closed client; dropped on its own recv
                    pass

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(tick_loop()) if auto_tick else None
        yield
        if task is not None:
            task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session
    app.state.clients = clients

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        async with lock:
            role = "driver" if "driver" not in clients.values() else "viewer"
            clients[ws] = role
        await ws.send_text(encode({"type": "hello", "schema": PROTOCOL_SCHEMA, "role": role}))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError as exc:
                    await ws.send_text(encode(_error(f"not valid JSON: {exc}")))
                    continue
                async with lock:
                    if clients[ws] != "driver":
                        reply = _error("read-only viewer; commands need the driver claim")
                    else:
                        reply = session.apply_message(msg)
                if reply is not None:
                    await ws.send_text(encode(reply))
        except WebSocketDisconnect:
            pass
        finally:
            async with lock:
                clients.pop(ws, None)  # a freed driver slot goes to the next connector

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="console")

    return app


def serve(scenario: Scenario, host: str, port: int, ui_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(scenario, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
