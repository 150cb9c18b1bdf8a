"""Discrete-event study harness: synthetic rooms, scripted visitors, seeded
service latencies, and a response-time report grouped by query kind.

No wall-clock sleeping anywhere: session clocks advance by event times and
sampled latencies, so a run over dozens of simulated minutes finishes in
milliseconds and the same seed reproduces the same report byte for byte.
Query kind grouping: AnchorLoad (room entry), General (chit-chat),
ObjectQuery ("what is this" at a flower).
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, replace
from typing import Optional

from . import fsm
from .anchors import (
    AnchorStore,
    Pose,
    RecognitionResult,
    RoomSignature,
    place_anchor,
)
from .dialogue import DialogueContext, KnowledgeBase, Query, SentimentLexicon, respond
from .engine import (
    Engine,
    EngineConfig,
    MetricsSummary,
    PerformanceAssets,
    QueryKind,
    QueryMetrics,
    aggregate_metrics,
    default_assets,
    default_kb,
    default_lexicon,
)
from .sampling import TruncatedNormal
from .vision import StubVision

ANCHOR_RADIUS = 0.5
EYE_HEIGHT = 0.0  # visitors and objects share one plane in the fixtures


class ScriptError(Exception):
    def __init__(self, step_index: int, reason: str):
        super().__init__(f"script step {step_index}: {reason}")
        self.step_index = step_index
        self.reason = reason


@dataclass(frozen=True)
class LatencyModel:
    vision: TruncatedNormal
    chatbot: TruncatedNormal
    processing: dict[QueryKind, float]

    def __post_init__(self):
        missing = set(QueryKind) - set(self.processing)
        if missing:
            raise ValueError(f"processing times missing for {sorted(k.value for k in missing)}")
        if any(v < 0 for v in self.processing.values()):
            raise ValueError("processing times must be >= 0")


def latency_model_from_dict(doc: dict) -> LatencyModel:
    return LatencyModel(
        vision=TruncatedNormal(float(doc["vision"]["mean"]), float(doc["vision"]["stddev"])),
        chatbot=TruncatedNormal(float(doc["chatbot"]["mean"]), float(doc["chatbot"]["stddev"])),
        processing={QueryKind(k): float(v) for k, v in doc["processing"].items()},
    )


def load_latency_model(path) -> LatencyModel:
    with open(path, "r", encoding="utf-8") as fh:
        return latency_model_from_dict(json.load(fh))


@dataclass
class SampledServices:
    """Service adapters whose latencies come from seeded distributions."""

    vision_backend: StubVision
    kb: KnowledgeBase
    lexicon: SentimentLexicon
    model: LatencyModel
    rng: random.Random

    def recognize(self, scene_ref: str):
        result = self.vision_backend.recognize(scene_ref)
        return result, self.model.vision.sample(self.rng)

    def chat(self, query: Query, context: DialogueContext):
        reply, new_context = respond(query, context, self.kb, self.lexicon)
        return reply, new_context, self.model.chatbot.sample(self.rng)

    def processing_time(self, kind: QueryKind) -> float:
        return self.model.processing[kind]


# --------------------------------------------------------------------------
# Scenario model.


@dataclass(frozen=True)
class SceneObject:
    label: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class Room:
    room_id: str
    character: str
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        labels = [o.label for o in self.objects]
        if len(set(labels)) != len(labels):
            raise ValueError(f"room {self.room_id!r} repeats an object label")


@dataclass(frozen=True)
class ScriptStep:
    at: float
    do: str  # ask_general | ask_about | say | gaze_character | gaze_object | gaze_off | tick
    text: Optional[str] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class UserEventScript:
    room_id: str
    steps: tuple[ScriptStep, ...]
    copies: int = 1

    def __post_init__(self):
        times = [s.at for s in self.steps]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("script step times must be non-decreasing")
        if self.copies < 1:
            raise ValueError("copies must be >= 1")


@dataclass(frozen=True)
class Scenario:
    name: str
    rooms: tuple[Room, ...]
    scripts: tuple[UserEventScript, ...]
    anchored: bool = False

    @property
    def placements(self) -> dict[str, str]:
        return {room.room_id: room.character for room in self.rooms}


def validate_scenario(scenario: Scenario) -> None:
    rooms = {room.room_id: room for room in scenario.rooms}
    for script in scenario.scripts:
        if script.room_id not in rooms:
            raise ScriptError(0, f"unknown room {script.room_id!r}")
        labels = {o.label for o in rooms[script.room_id].objects}
        for i, step in enumerate(script.steps):
            if step.do == "ask_about" or step.do == "gaze_object":
                if step.label not in labels:
                    raise ScriptError(i, f"unknown object {step.label!r} in {script.room_id!r}")
            elif step.do in ("ask_general", "say"):
                if not step.text:
                    raise ScriptError(i, f"{step.do} needs text")
            elif step.do not in ("gaze_character", "gaze_off", "tick"):
                raise ScriptError(i, f"unknown step kind {step.do!r}")


def scenario_from_dict(doc: dict) -> Scenario:
    rooms = tuple(
        Room(
            room_id=raw["room_id"],
            character=raw.get("character", f"guide_{raw['room_id']}"),
            objects=tuple(
                SceneObject(obj["label"], tuple(float(c) for c in obj["position"]))
                for obj in raw["objects"]
            ),
        )
        for raw in doc["rooms"]
    )
    scripts = tuple(
        UserEventScript(
            room_id=raw["room"],
            copies=int(raw.get("copies", 1)),
            steps=tuple(
                ScriptStep(
                    at=float(step["at"]),
                    do=step["do"],
                    text=step.get("text"),
                    label=step.get("label"),
                )
                for step in raw["steps"]
            ),
        )
        for raw in doc["scripts"]
    )
    scenario = Scenario(name=doc.get("name", "scenario"), rooms=rooms, scripts=scripts)
    validate_scenario(scenario)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def default_scenario() -> Scenario:
    from .engine import asset_path

    return load_scenario(asset_path("garden.json"))


def default_latency_model() -> LatencyModel:
    from .engine import asset_path

    return load_latency_model(asset_path("measured.json"))


def anchored_variant(scenario: Scenario) -> Scenario:
    """Same rooms and scripts, but every object pre-anchored so gaze rays
    resolve without recognition."""
    return replace(scenario, anchored=True)


def build_store(scenario: Scenario) -> AnchorStore:
    """Room signatures always; anchors only for the anchored variant."""
    store = AnchorStore()
    placements = []
    for room in scenario.rooms:
        for obj in room.objects:
            placements.append((room.room_id, obj))
    if scenario.anchored:
        for room_id, obj in placements:
            store, _ = place_anchor(
                store,
                room_id,
                RecognitionResult(obj.label, 0.92),
                Pose(position=obj.position),
                ANCHOR_RADIUS,
            )
    else:
        # Signatures without anchors: the rooms are known, their objects
        # have not been individually anchored yet.
        signatures = tuple(
            RoomSignature(room.room_id, frozenset(o.label for o in room.objects))
            for room in scenario.rooms
        )
        store = AnchorStore(anchors=(), signatures=signatures)
    return store


def scenario_fixtures(scenario: Scenario) -> dict[str, RecognitionResult]:
    """Scene table the recognizer stub serves for this scenario: one view
    per object plus a room overview that sees the first object."""
    fixtures: dict[str, RecognitionResult] = {}
    for room in scenario.rooms:
        for obj in room.objects:
            fixtures[f"{room.room_id}/{obj.label}_view"] = RecognitionResult(obj.label, 0.92)
        fixtures[f"{room.room_id}/overview"] = RecognitionResult(room.objects[0].label, 0.9)
    return fixtures


def _unit_towards(position: tuple[float, float, float]) -> tuple[float, float, float]:
    origin = (0.0, EYE_HEIGHT, 0.0)
    rel = tuple(p - o for p, o in zip(position, origin))
    norm = math.sqrt(sum(c * c for c in rel))
    if norm == 0:
        raise ValueError("object sits exactly at the visitor origin")
    return tuple(c / norm for c in rel)


def expand_script(script: UserEventScript, room: Room, config: EngineConfig) -> list[fsm.UserEvent]:
    """Lower high-level steps into timed user events.

    Every script opens with the dwell preamble (gaze the character, wait out
    the threshold) and closes with a gaze-away plus a late tick so the
    conversation ends on the silence timeout.
    """
    objects = {o.label: o for o in room.objects}
    dwell = config.fsm.dwell_threshold
    events: list[fsm.UserEvent] = [
        fsm.GazeOn(target=fsm.CharacterTarget(), t=0.0),
        fsm.Tick(now=dwell),
    ]
    last = dwell
    for i, step in enumerate(script.steps):
        t = step.at
        if t < dwell:
            raise ScriptError(i, f"step at {t} precedes the {dwell} s dwell preamble")
        if step.do == "ask_general":
            events.append(fsm.SpeechFinal(text=step.text, t=t))
        elif step.do == "say":
            events.append(fsm.SpeechStarted(t=t))
            events.append(fsm.SpeechFinal(text=step.text, t=t))
        elif step.do == "ask_about":
            obj = objects[step.label]
            ray = fsm.WorldRay(
                origin=(0.0, EYE_HEIGHT, 0.0),
                direction=_unit_towards(obj.position),
                scene_ref=f"{room.room_id}/{obj.label}_view",
            )
            events.append(fsm.GazeOn(target=ray, t=t))
            events.append(fsm.VoiceCommand(text="what is this", t=t))
        elif step.do == "gaze_character":
            events.append(fsm.GazeOn(target=fsm.CharacterTarget(), t=t))
        elif step.do == "gaze_object":
            obj = objects[step.label]
            ray = fsm.WorldRay(
                origin=(0.0, EYE_HEIGHT, 0.0),
                direction=_unit_towards(obj.position),
                scene_ref=f"{room.room_id}/{obj.label}_view",
            )
            events.append(fsm.GazeOn(target=ray, t=t))
        elif step.do == "gaze_off":
            events.append(fsm.GazeOff(t=t))
        elif step.do == "tick":
            events.append(fsm.Tick(now=t))
        last = max(last, t)
    # Generous tail: replies and playback may run long past the last step.
    events.append(fsm.GazeOff(t=last + 60.0))
    events.append(fsm.Tick(now=last + 60.0 + config.fsm.end_silence_timeout + 1.0))
    return events


# --------------------------------------------------------------------------
# Reports.


@dataclass(frozen=True)
class QueryRecord:
    session_id: str
    kind: QueryKind
    or_time: Optional[float]
    chatbot_time: Optional[float]
    processing_time: float
    total_time: float

    @classmethod
    def from_metrics(cls, session_id: str, m: QueryMetrics) -> "QueryRecord":
        return cls(
            session_id=session_id,
            kind=m.query_kind,
            or_time=m.or_time,
            chatbot_time=m.chatbot_time,
            processing_time=m.processing_time,
            total_time=m.total_time,
        )

    def metrics(self) -> QueryMetrics:
        return QueryMetrics(
            query_kind=self.kind,
            or_time=self.or_time,
            chatbot_time=self.chatbot_time,
            processing_time=self.processing_time,
            total_time=self.total_time,
        )


@dataclass(frozen=True)
class SimReport:
    scenario_name: str
    seed: int
    anchored: bool
    records: tuple[QueryRecord, ...]
    vision_calls: int

    def summary(self, kind: QueryKind) -> MetricsSummary:
        return aggregate_metrics([r.metrics() for r in self.records], kind)


def report_to_dict(report: SimReport) -> dict:
    def summarize(kind: QueryKind) -> dict:
        s = report.summary(kind)
        return {
            "count": s.count,
            "mean_or": s.mean_or,
            "mean_chatbot": s.mean_chatbot,
            "mean_processing": s.mean_processing,
            "mean_total": s.mean_total,
            "stddev_total": s.stddev_total,
        }

    return {
        "scenario": report.scenario_name,
        "seed": report.seed,
        "anchored": report.anchored,
        "vision_calls": report.vision_calls,
        "records": [
            {
                "session_id": r.session_id,
                "kind": r.kind.value,
                "or_time": r.or_time,
                "chatbot_time": r.chatbot_time,
                "processing_time": r.processing_time,
                "total_time": r.total_time,
            }
            for r in report.records
        ],
        "aggregates": {kind.value: summarize(kind) for kind in QueryKind},
    }


def save_report(report: SimReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path) -> SimReport:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    records = tuple(
        QueryRecord(
            session_id=raw["session_id"],
            kind=QueryKind(raw["kind"]),
            or_time=raw["or_time"],
            chatbot_time=raw["chatbot_time"],
            processing_time=raw["processing_time"],
            total_time=raw["total_time"],
        )
        for raw in doc["records"]
    )
    report = SimReport(
        scenario_name=doc["scenario"],
        seed=doc["seed"],
        anchored=doc["anchored"],
        records=records,
        vision_calls=doc["vision_calls"],
    )
    # Stored aggregates must be recomputable from the raw records.
    recomputed = report_to_dict(report)["aggregates"]
    if recomputed != doc["aggregates"]:
        raise ValueError("report aggregates do not match raw records")
    return report


_ROW_LABELS = (
    ("count", "Total queries"),
    ("mean_or", "Object recognition (s)"),
    ("mean_chatbot", "Chatbot (s)"),
    ("mean_processing", "Processing time (s)"),
    ("mean_total", "Total Time (s)"),
    ("stddev_total", "Std Dev (s)"),
)

_KIND_HEADERS = (
    (QueryKind.ANCHOR_LOAD, "Query A (anchor load)"),
    (QueryKind.GENERAL, "Query B (general)"),
    (QueryKind.OBJECT_QUERY, "Query C (object)"),
)


def render_report(report: SimReport) -> str:
    summaries = {kind: report.summary(kind) for kind, _ in _KIND_HEADERS}

    def cell(value, is_count=False) -> str:
        if value is None:
            return "-"
        return str(value) if is_count else f"{value:.2f}"

    headers = ["Measure"] + [title for _, title in _KIND_HEADERS]
    rows = [headers]
    for attr, label in _ROW_LABELS:
        row = [label]
        for kind, _ in _KIND_HEADERS:
            row.append(cell(getattr(summaries[kind], attr), is_count=attr == "count"))
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(col.ljust(widths[j]) for j, col in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    title = f"scenario {report.scenario_name}  seed {report.seed}" + (
        "  (anchored)" if report.anchored else ""
    )
    return title + "\n" + "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# The run loop.


@dataclass
class SimRun:
    """A finished run with its sessions kept around for inspection."""

    report: SimReport
    sessions: list  # engine Session objects, ordered by id
    traces: dict[str, list[dict]]


def run(
    scenario: Scenario,
    model: LatencyModel,
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    kb: Optional[KnowledgeBase] = None,
    lexicon: Optional[SentimentLexicon] = None,
    assets: Optional[PerformanceAssets] = None,
) -> SimRun:
    validate_scenario(scenario)
    config = config or EngineConfig(expected_vision_latency=model.vision.mean)
    kb = kb or default_kb()
    lexicon = lexicon or default_lexicon()
    assets = assets or default_assets()
    store = build_store(scenario)
    fixtures = scenario_fixtures(scenario)
    stub = StubVision(fixtures)
    rooms = {room.room_id: room for room in scenario.rooms}

    # One engine+session per script copy, each with its own seeded latency
    # stream so adding a session never shifts another session's samples.
    sessions = []
    engines = {}
    plans: list[tuple[str, list[fsm.UserEvent]]] = []
    index = 0
    for script in scenario.scripts:
        for _ in range(script.copies):
            index += 1
            session_id = f"s{index:03d}"
            services = SampledServices(
                vision_backend=stub,
                kb=kb,
                lexicon=lexicon,
                model=model,
                rng=random.Random(f"{seed}:{session_id}"),
            )
            engine = Engine(config, services, assets, store)
            session = engine.new_session(session_id)
            engines[session_id] = engine
            sessions.append((session_id, session, script.room_id))
            plans.append((session_id, expand_script(script, rooms[script.room_id], config)))

    # Room entry first: anchor loading is the session's first query.
    by_id = {sid: session for sid, session, _ in sessions}
    for session_id, session, room_id in sessions:
        engines[session_id].initialize_room(
            session, scene_refs=[f"{room_id}/overview"]
        )

    # Deterministic interleave across sessions on the simulated clock.
    heap: list[tuple[float, str, int, int]] = []
    flat_events: list[fsm.UserEvent] = []
    for session_id, events in plans:
        for order, event in enumerate(events):
            heap.append((event.t, session_id, order, len(flat_events)))
            flat_events.append(event)
    heapq.heapify(heap)
    while heap:
        _, session_id, _, idx = heapq.heappop(heap)
        session = by_id[session_id]
        if session.ended:
            continue
        engines[session_id].submit_event(session, flat_events[idx])

    records = []
    for session_id, session, _ in sessions:
        for metrics in session.metrics_log:
            records.append(QueryRecord.from_metrics(session_id, metrics))
    report = SimReport(
        scenario_name=scenario.name,
        seed=seed,
        anchored=scenario.anchored,
        records=tuple(records),
        vision_calls=stub.calls,
    )
    return SimRun(
        report=report,
        sessions=[session for _, session, _ in sessions],
        traces={sid: session.trace for sid, session, _ in sessions},
    )
