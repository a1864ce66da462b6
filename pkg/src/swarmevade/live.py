"""Live piloting bridge: streams world frames over WebSocket, accepts commands.

One simulation thread owns the world; viewers subscribe to a frame feed and
at most one client (the first to send a command) pilots the interferer.
Commands are applied only at step boundaries, and the server clamps the
commanded interferer speed so it can never exceed 90% of the swarm speed
limit, whatever the client sends.
"""

from __future__ import annotations

import asyncio
import json
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import World, build_world, step_world
from .scenario import PolicyKind, ScenarioConfig, parse_scenario
from .types import ConfigError, vec3

MAX_FRAME_RATE = 20.0
KEEPALIVE_PERIOD_S = 0.2


def encode_frame(world: World, events: list) -> str:
    """One JSON text frame: time, agent poses+modes, interferers, new events."""
    return json.dumps({
        "type": "state",
        "t": round(world.time, 9),
        "agents": [
            {
                "id": a.id,
                "x": round(float(a.state.position[0]), 9),
                "y": round(float(a.state.position[1]), 9),
                "mode": a.proto.mode.value,
            }
            for a in world.agents
        ],
        "interferers": [
            {
                "id": i.id,
                "x": round(float(i.position[0]), 9),
                "y": round(float(i.position[1]), 9),
            }
            for i in world.interferers
        ],
        "events": [
            {"t": round(e.time, 9), "kind": e.kind, "agent": e.agent_id} for e in events
        ],
    })


@dataclass
class _Client:
    frames: "queue.Queue[str]" = field(default_factory=lambda: queue.Queue(maxsize=64))

    def push(self, frame: str) -> None:
        # Keep the newest frame; a slow consumer drops stale ones.
        while True:
            try:
                self.frames.put_nowait(frame)
                return
            except queue.Full:
                try:
                    self.frames.get_nowait()
                except queue.Empty:
                    pass


class SimulationHost:
    """Owns the world and its stepping thread; hands out frame feeds."""

    def __init__(self, config: ScenarioConfig, raw_scenario: Optional[dict] = None,
                 step_delay: Optional[float] = None):
        self._initial_config = config
        self.raw_scenario = raw_scenario if raw_scenario is not None else {}
        self.step_delay = config.dt if step_delay is None else step_delay
        self.world = build_world(config)
        self.paused = False
        self.commands: "queue.Queue[dict]" = queue.Queue()
        self.clients: list[_Client] = []
        self.pilot_id: Optional[int] = None
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._events_sent = 0
        self._frame_stride = max(1, math.ceil(1.0 / (MAX_FRAME_RATE * config.dt)))

    # -- lifecycle ---------------------------------------------------------
    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    # -- client management -------------------------------------------------
    def subscribe(self) -> _Client:
        client = _Client()
        with self._lock:
            self.clients.append(client)
        client.push(self._render_frame())
        return client

    def unsubscribe(self, client: _Client, connection_id: int) -> None:
        with self._lock:
            if client in self.clients:
                self.clients.remove(client)
            if self.pilot_id == connection_id:
                self.pilot_id = None

    def claim_pilot(self, connection_id: int) -> bool:
        with self._lock:
            if self.pilot_id is None:
                self.pilot_id = connection_id
            return self.pilot_id == connection_id

    # -- commands ----------------------------------------------------------
    def handle_command(self, raw: str, connection_id: int) -> Optional[dict]:
        """Validate one command; queue it and return None, or an error reply."""
        try:
            cmd = json.loads(raw)
        except json.JSONDecodeError:
            return {"type": "error", "reason": "invalid JSON"}
        if not isinstance(cmd, dict) or "type" not in cmd:
            return {"type": "error", "reason": "command must be an object with a type"}
        kind = cmd["type"]
        if kind == "intruder_vel":
            try:
                vx = float(cmd["vx"])
                vy = float(cmd["vy"])
            except (KeyError, TypeError, ValueError):
                return {"type": "error", "reason": "intruder_vel needs numeric vx, vy"}
            if not (math.isfinite(vx) and math.isfinite(vy)):
                return {"type": "error", "reason": "intruder_vel must be finite"}
            if not self.claim_pilot(connection_id):
                return {"type": "error", "reason": "another pilot is connected"}
            self.commands.put({"type": "intruder_vel", "vx": vx, "vy": vy})
            return None
        if kind in ("pause", "resume"):
            if not self.claim_pilot(connection_id):
                return {"type": "error", "reason": "another pilot is connected"}
            self.commands.put({"type": kind})
            return None
        if kind == "reset":
            scenario = cmd.get("scenario")
            if scenario is not None:
                try:
                    parse_scenario(scenario)
                except ConfigError as exc:
                    return {"type": "error", "reason": f"bad scenario: {exc}"}
            if not self.claim_pilot(connection_id):
                return {"type": "error", "reason": "another pilot is connected"}
            self.commands.put({"type": "reset", "scenario": scenario})
            return None
        return {"type": "error", "reason": f"unknown command type {kind!r}"}

    def _apply_commands(self) -> None:
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                return
            if cmd["type"] == "intruder_vel":
                for intr in self.world.interferers:
                    if intr.policy.kind == PolicyKind.EXTERNAL:
                        intr.command = vec3(cmd["vx"], cmd["vy"], 0.0)
            elif cmd["type"] == "pause":
                self.paused = True
            elif cmd["type"] == "resume":
                self.paused = False
            elif cmd["type"] == "reset":
                config = self._initial_config
                if cmd["scenario"] is not None:
                    config = parse_scenario(cmd["scenario"])
                    self.raw_scenario = cmd["scenario"]
                self.world = build_world(config)
                self._events_sent = 0

    # -- stepping ----------------------------------------------------------
    def _render_frame(self) -> str:
        events = self.world.record.events[self._events_sent:]
        self._events_sent = len(self.world.record.events)
        return encode_frame(self.world, events)

    def _broadcast(self) -> None:
        frame = self._render_frame()
        with self._lock:
            clients = list(self.clients)
        for client in clients:
            client.push(frame)

    def step_once(self) -> None:
        """Advance one step (commands applied at the boundary) and broadcast."""
        self._apply_commands()
        if self.paused:
            self._broadcast()
            return
        step_world(self.world)
        if self.world.step % self._frame_stride == 0:
            self._broadcast()

    def _loop(self) -> None:
        next_tick = time.monotonic()
        while not self._stop.is_set():
            period = KEEPALIVE_PERIOD_S if self.paused else self.step_delay
            self.step_once()
            next_tick += period
            delay = next_tick - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_tick = time.monotonic()


def create_app(config: ScenarioConfig, raw_scenario: Optional[dict] = None,
               step_delay: Optional[float] = None) -> FastAPI:
    app = FastAPI(title="swarmevade live")
    host = SimulationHost(config, raw_scenario, step_delay)
    app.state.host = host

    @app.on_event("startup")
    def _startup():
        host.start()

    @app.on_event("shutdown")
    def _shutdown():
        host.stop()

    @app.get("/scenario")
    def get_scenario():
        return host.raw_scenario

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        connection_id = id(ws)
        client = host.subscribe()

        async def pump_frames():
            loop = asyncio.get_running_loop()
            while True:
                try:
                    frame = await loop.run_in_executor(None, client.frames.get, True, 1.0)
                except queue.Empty:
                    continue
                await ws.send_text(frame)

        pump = asyncio.create_task(pump_frames())
        try:
            while True:
                raw = await ws.receive_text()
                reply = host.handle_command(raw, connection_id)
                if reply is not None:
                    await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            host.unsubscribe(client, connection_id)

    return app


def serve(config: ScenarioConfig, host: str = "127.0.0.1", port: int = 8000,
          step_delay: Optional[float] = None, raw_scenario: Optional[dict] = None) -> None:
    import uvicorn

    app = create_app(config, raw_scenario, step_delay)
    uvicorn.run(app, host=host, port=port, log_level="warning")
