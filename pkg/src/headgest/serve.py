"""WebSocket service: one streaming predictor per client session.

Clients stream JSON text frames of live angle samples and receive prediction
frames back on the same connection. Sessions are fully isolated; an idle
session is closed after a configurable timeout.

Wire schema (UTF-8 JSON, one object per frame):
  client -> server: {"type":"sample","pitch":x,"roll":y}
                    {"type":"reset"} | {"type":"config","warm_start":bool}
  server -> client: {"type":"prediction","sample_index":i,
                     "probs":{"nod":..,"shake":..,"other":..},"label":..}
                    {"type":"ack","of":"reset"|"config"}
                    {"type":"error","detail":"..."}
"""
from __future__ import annotations

import asyncio
import itertools
import json
import math
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .nn import Model
from .stream import StreamConfig, StreamPredictor

_session_ids = itertools.count(1)


@dataclass
class Session:
    session_id: str
    predictor: StreamPredictor
    websocket: WebSocket | None = None
    last_activity: float = field(default_factory=time.monotonic)

    def touch(self) -> None:
        self.last_activity = time.monotonic()


def _prediction_message(sample_index: int, prediction) -> dict:
    return {
        "type": "prediction",
        "sample_index": sample_index,
        "probs": {
            "nod": float(prediction.probs[0]),
            "shake": float(prediction.probs[1]),
            "other": float(prediction.probs[2]),
        },
        "label": prediction.label.value,
    }


def _error(detail: str) -> dict:
    return {"type": "error", "detail": detail}


def handle_message(session: Session, msg: dict) -> list[dict]:
    """Apply one inbound message to a session; returns outbound messages."""
    session.touch()
    if not isinstance(msg, dict):
        return [_error("message must be a JSON object")]
    kind = msg.get("type")
    if kind == "sample":
        pitch, roll = msg.get("pitch"), msg.get("roll")
        if not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
            for v in (pitch, roll)
        ):
            return [_error("sample requires finite numeric 'pitch' and 'roll'")]
        prediction = session.predictor.push_sample(float(pitch), float(roll))
        if prediction is None:
            return []
        return [_prediction_message(session.predictor.samples_seen, prediction)]
    if kind == "reset":
        session.predictor.reset()
        return [{"type": "ack", "of": "reset"}]
    if kind == "config":
        warm = msg.get("warm_start")
        if not isinstance(warm, bool):
            return [_error("config requires boolean 'warm_start'")]
        session.predictor.cfg = replace(session.predictor.cfg, warm_start=warm)
        return [{"type": "ack", "of": "config"}]
    return [_error(f"unknown message type: {kind!r}")]


def reap_idle(sessions: dict[str, Session], idle_timeout_s: float) -> list[Session]:
    """Remove sessions idle longer than the timeout; returns those removed."""
    now = time.monotonic()
    stale = [s for s in sessions.values() if now - s.last_activity > idle_timeout_s]
    for session in stale:
        sessions.pop(session.session_id, None)
    return stale


async def _close_quietly(ws: WebSocket, code: int) -> None:
    try:
        await ws.close(code=code)
    except Exception:
        pass


def create_app(
    model: Model,
    *,
    default_warm_start: bool = False,
    idle_timeout_s: float = 120.0,
    static_dir: str | None = None,
) -> FastAPI:
    sessions: dict[str, Session] = {}

    async def reaper() -> None:
        interval = max(0.05, min(idle_timeout_s / 4.0, 5.0))
        while True:
            await asyncio.sleep(interval)
            for session in reap_idle(sessions, idle_timeout_s):
                if session.websocket is not None:
                    await _close_quietly(session.websocket, code=1001)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(reaper())
        try:
            yield
        finally:
            task.cancel()
            for session in list(sessions.values()):
                sessions.pop(session.session_id, None)
                if session.websocket is not None:
                    await _close_quietly(session.websocket, code=1001)

    app = FastAPI(lifespan=lifespan)
    app.state.sessions = sessions

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        cfg = StreamConfig(warm_start=default_warm_start)
        session = Session(
            session_id=f"s{next(_session_ids)}",
            predictor=StreamPredictor(model, cfg),
            websocket=websocket,
        )
        sessions[session.session_id] = session
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    outbound = [_error("malformed JSON")]
                    session.touch()
                else:
                    outbound = handle_message(session, msg)
                for out in outbound:
                    await websocket.send_text(json.dumps(out))
        except WebSocketDisconnect:
            pass
        finally:
            sessions.pop(session.session_id, None)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
