"""HTTP session service: create sessions, post user events, stream outputs.

Everything lives under /v1. Output events are sequence-numbered per session
and replayable from any sequence number, so a dropped console reconnects
without losing or duplicating anything. Session clocks advance only through
explicit Tick events, which keeps live and simulated sessions on the same
code path. The chatbot is also exposed directly as a request/response
endpoint, and the recognition stub under /v1/recognize.
"""

from __future__ import annotations

import json
import random
import threading
import time
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import engine as eng
from . import fsm, wire
from .composer import timeline_to_dict
from .dialogue import DialogueContext, Query, respond
from .simulation import (
    LatencyModel,
    SampledServices,
    Scenario,
    build_store,
    default_latency_model,
    default_scenario,
    scenario_fixtures,
)
from .vision import MISS, StubVision

HISTORY_CAP = 10_000
STREAM_POLL_SECONDS = 0.05


# --------------------------------------------------------------------------
# Wire models.


class CreateSessionRequest(BaseModel):
    binding: str  # "<scenario>/<room>", e.g. "garden/room1"
    anchored: bool = False
    seed: int = 0
    init_room: bool = True


class CreateSessionResponse(BaseModel):
    session_id: str
    scenario: str
    room_id: str
    anchored: bool


class EventEnvelope(BaseModel):
    event: dict[str, Any]


class PostEventResponse(BaseModel):
    accepted: bool
    seq_start: int
    seq_end: int  # exclusive
    state: str


class SessionInfo(BaseModel):
    session_id: str
    state: str
    clock: float
    room_id: Optional[str]
    ended: bool
    next_seq: int


class ChatRequest(BaseModel):
    text: str
    object: Optional[str] = None


class ChatResponse(BaseModel):
    reply: str
    sentiment_class: str
    sentiment_level: str


class RecognizeRequest(BaseModel):
    scene_ref: str


class RecognizeResponse(BaseModel):
    label: str
    confidence: float


# --------------------------------------------------------------------------
# Serialization of engine outputs.


def _anchor_to_dict(anchor) -> dict:
    return {
        "id": anchor.id,
        "room_id": anchor.room_id,
        "label": anchor.object_label,
        "position": list(anchor.pose.position),
        "radius": anchor.radius,
    }


def output_to_dict(output: eng.OutputEvent) -> dict:
    if isinstance(output, eng.StateChanged):
        return {"type": "state_changed", "t": output.t, "state": wire.state_to_dict(output.state)}
    if isinstance(output, eng.AgentPerformance):
        return {
            "type": "agent_performance",
            "t": output.t,
            "text": output.text,
            "is_filler": output.is_filler,
            "timeline": timeline_to_dict(output.timeline),
        }
    if isinstance(output, eng.MetricsUpdated):
        m = output.metrics
        return {
            "type": "metrics_updated",
            "t": output.t,
            "metrics": {
                "kind": m.query_kind.value,
                "or_time": m.or_time,
                "chatbot_time": m.chatbot_time,
                "processing_time": m.processing_time,
                "total_time": m.total_time,
            },
        }
    if isinstance(output, eng.RoomResolved):
        return {
            "type": "room_resolved",
            "t": output.t,
            "room_id": output.room_id,
            "anchors": [_anchor_to_dict(a) for a in output.anchors],
        }
    if isinstance(output, eng.SessionEnded):
        return {"type": "session_ended", "t": output.t}
    raise TypeError(f"not an OutputEvent: {output!r}")


# --------------------------------------------------------------------------
# Per-session runtime: engine + numbered outbox behind one lock.


class SessionRuntime:
    def __init__(self, session_id: str, engine: eng.Engine, scenario: str, room_id: str, anchored: bool):
        self.lock = threading.Lock()
        self.engine = engine
        self.session = engine.new_session(session_id)
        self.scenario = scenario
        self.room_id = room_id
        self.anchored = anchored
        self.events: list[dict] = []
        self.first_seq = 0
        self.next_seq = 0
        self._push_raw({"type": "state_changed", "t": 0.0, "state": wire.state_to_dict(self.session.fsm_state)})

    def _push_raw(self, payload: dict) -> None:
        payload = dict(payload)
        payload["seq"] = self.next_seq
        self.next_seq += 1
        self.events.append(payload)
        overflow = len(self.events) - HISTORY_CAP
        if overflow > 0:
            del self.events[:overflow]
            self.first_seq += overflow

    def push_outputs(self, outputs: list[eng.OutputEvent]) -> tuple[int, int]:
        start = self.next_seq
        for output in outputs:
            self._push_raw(output_to_dict(output))
        return start, self.next_seq

    def snapshot(self, from_seq: int) -> list[dict]:
        if from_seq < self.first_seq:
            from_seq = self.first_seq
        return self.events[from_seq - self.first_seq :]


def create_app(
    scenarios: Optional[dict[str, Scenario]] = None,
    latency: Optional[LatencyModel] = None,
    server_seed: int = 0,
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="guidebot session service", version="1")
    scenarios = scenarios or {"garden": default_scenario()}
    latency = latency or default_latency_model()
    kb = eng.default_kb()
    lexicon = eng.default_lexicon()
    assets = eng.default_assets()

    all_fixtures: dict = {}
    for scenario in scenarios.values():
        all_fixtures.update(scenario_fixtures(scenario))

    state = {
        "sessions": {},  # id -> SessionRuntime
        "counter": 0,
        "lock": threading.Lock(),
    }
    app.state.service = state

    def runtime_or_404(session_id: str) -> SessionRuntime:
        runtime = state["sessions"].get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return runtime

    @app.get("/v1/scenarios")
    def list_scenarios() -> dict:
        return {
            "scenarios": [
                {
                    "name": name,
                    "rooms": [
                        {
                            "room_id": room.room_id,
                            "character": room.character,
                            "objects": [
                                {"label": o.label, "position": list(o.position)}
                                for o in room.objects
                            ],
                        }
                        for room in scenario.rooms
                    ],
                }
                for name, scenario in scenarios.items()
            ]
        }

    @app.post("/v1/sessions", response_model=CreateSessionResponse)
    def create_session(body: CreateSessionRequest) -> CreateSessionResponse:
        try:
            scenario_name, room_id = body.binding.split("/", 1)
        except ValueError:
            raise HTTPException(status_code=422, detail="binding must look like 'scenario/room'")
        scenario = scenarios.get(scenario_name)
        if scenario is None or room_id not in scenario.placements:
            raise HTTPException(status_code=404, detail=f"unknown scenario binding {body.binding!r}")
        bound = scenario
        if body.anchored:
            from .simulation import anchored_variant

            bound = anchored_variant(scenario)
        with state["lock"]:
            state["counter"] += 1
            session_id = f"w{state['counter']:04d}"
        services = SampledServices(
            vision_backend=StubVision(dict(all_fixtures)),
            kb=kb,
            lexicon=lexicon,
            model=latency,
            rng=random.Random(f"{body.seed}:{session_id}"),
        )
        config = eng.EngineConfig(expected_vision_latency=latency.vision.mean)
        engine = eng.Engine(config, services, assets, build_store(bound))
        runtime = SessionRuntime(session_id, engine, scenario_name, room_id, body.anchored)
        if body.init_room:
            with runtime.lock:
                outputs = engine.initialize_room(
                    runtime.session, scene_refs=[f"{room_id}/overview"]
                )
                runtime.push_outputs(outputs)
        state["sessions"][session_id] = runtime
        return CreateSessionResponse(
            session_id=session_id,
            scenario=scenario_name,
            room_id=room_id,
            anchored=body.anchored,
        )

    @app.post("/v1/sessions/{session_id}/events", response_model=PostEventResponse)
    def post_event(session_id: str, body: EventEnvelope) -> PostEventResponse:
        runtime = runtime_or_404(session_id)
        try:
            event = wire.event_from_dict(body.event)
        except wire.MalformedEvent as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with runtime.lock:
            if runtime.session.ended:
                raise HTTPException(status_code=409, detail="session has ended")
            try:
                outputs = runtime.engine.submit_event(runtime.session, event)
            except eng.SessionEndedError:
                raise HTTPException(status_code=409, detail="session has ended")
            start, end = runtime.push_outputs(outputs)
            return PostEventResponse(
                accepted=True,
                seq_start=start,
                seq_end=end,
                state=fsm.state_name(runtime.session.fsm_state),
            )

    @app.get("/v1/sessions/{session_id}", response_model=SessionInfo)
    def session_info(session_id: str) -> SessionInfo:
        runtime = runtime_or_404(session_id)
        with runtime.lock:
            return SessionInfo(
                session_id=session_id,
                state=fsm.state_name(runtime.session.fsm_state),
                clock=runtime.session.clock,
                room_id=runtime.session.active_room,
                ended=runtime.session.ended,
                next_seq=runtime.next_seq,
            )

    @app.get("/v1/sessions/{session_id}/history")
    def history(session_id: str, from_seq: int = 0) -> dict:
        runtime = runtime_or_404(session_id)
        with runtime.lock:
            events = runtime.snapshot(from_seq)
            return {"events": events, "next_seq": runtime.next_seq}

    @app.get("/v1/sessions/{session_id}/trace")
    def trace(session_id: str) -> dict:
        runtime = runtime_or_404(session_id)
        with runtime.lock:
            return {"trace": list(runtime.session.trace)}

    @app.get("/v1/sessions/{session_id}/metrics")
    def metrics(session_id: str) -> dict:
        runtime = runtime_or_404(session_id)
        with runtime.lock:
            log = list(runtime.session.metrics_log)
        out = {}
        for kind in eng.QueryKind:
            s = eng.aggregate_metrics(log, kind)
            out[kind.value] = {
                "count": s.count,
                "mean_or": s.mean_or,
                "mean_chatbot": s.mean_chatbot,
                "mean_processing": s.mean_processing,
                "mean_total": s.mean_total,
                "stddev_total": s.stddev_total,
            }
        return {"kinds": out}

    @app.get("/v1/sessions/{session_id}/stream")
    def stream(session_id: str, from_seq: int = 0):
        runtime = runtime_or_404(session_id)

        def generate():
            cursor = from_seq
            while True:
                with runtime.lock:
                    events = runtime.snapshot(cursor)
                    ended = runtime.session.ended
                    cursor = max(cursor, runtime.next_seq)
                for payload in events:
                    yield f"id: {payload['seq']}\ndata: {json.dumps(payload)}\n\n"
                if ended and not events:
                    yield "event: end\ndata: {}\n\n"
                    return
                if not events:
                    time.sleep(STREAM_POLL_SECONDS)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/v1/chat", response_model=ChatResponse)
    def chat(body: ChatRequest) -> ChatResponse:
        try:
            query = Query(text=body.text, object_label=body.object)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        reply, _ = respond(query, DialogueContext(), kb, lexicon)
        return ChatResponse(
            reply=reply.text,
            sentiment_class=reply.sentiment_class.value,
            sentiment_level=reply.sentiment_level.value,
        )

    @app.post("/v1/recognize", response_model=RecognizeResponse)
    def recognize_stub(body: RecognizeRequest) -> RecognizeResponse:
        result = all_fixtures.get(body.scene_ref, MISS)
        return RecognizeResponse(label=result.label, confidence=result.confidence)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def serve(host: str = "127.0.0.1", port: int = 8600, static_dir: Optional[str] = None) -> None:
    import uvicorn

    uvicorn.run(create_app(static_dir=static_dir), host=host, port=port, log_level="info")
