"""Per-session orchestrator: routes FSM actions through anchors, vision,
the chatbot, and the performance composer.

Object resolution order is anchors first, vision second; a vision call that
is expected to run long gets masked by an immediate filler performance. All
timing is kept on the session clock so the same engine drives simulated and
live sessions, and every query appends a QueryMetrics record whose total is
the sum of its recorded components.
"""

from __future__ import annotations

import enum
import json
import os
import statistics
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Union

from . import fsm, wire
from .anchors import Anchor, AnchorStore, hit_test, load_room, resolve_room, Ambiguous, Unknown, EmptyObservation
from .composer import (
    ClipLibrary,
    MappingTable,
    PerformanceTimeline,
    PhonemeLexicon,
    VisemeMap,
    assemble,
    load_clips,
    load_mapping,
    load_phonemes,
    load_visemes,
)
from .dialogue import (
    DialogueContext,
    KnowledgeBase,
    Query,
    Reply,
    SentimentClass,
    SentimentLevel,
    SentimentLexicon,
    classify_sentiment,
    load_kb,
    load_lexicon,
    respond,
)
from .vision import (
    EndpointConfig,
    EndpointError,
    MalformedResponse,
    Timeout,
    VisionError,
)


class QueryKind(enum.Enum):
    ANCHOR_LOAD = "AnchorLoad"
    GENERAL = "General"
    OBJECT_QUERY = "ObjectQuery"


class SessionEndedError(Exception):
    """The session has reached Ended; it accepts no further input."""


@dataclass(frozen=True)
class QueryMetrics:
    query_kind: QueryKind
    or_time: Optional[float]  # present iff vision was invoked
    chatbot_time: Optional[float]
    processing_time: float
    total_time: float

    def __post_init__(self):
        parts = (self.or_time or 0.0) + (self.chatbot_time or 0.0) + self.processing_time
        if abs(parts - self.total_time) > 1e-6:
            raise ValueError(
                f"total_time {self.total_time} != component sum {parts}"
            )
        if self.processing_time < 0:
            raise ValueError("processing_time must be >= 0")


@dataclass(frozen=True)
class MetricsSummary:
    kind: QueryKind
    count: int
    mean_or: Optional[float]
    mean_chatbot: Optional[float]
    mean_processing: Optional[float]
    mean_total: Optional[float]
    stddev_total: float


def aggregate_metrics(log: list[QueryMetrics], kind: QueryKind) -> MetricsSummary:
    rows = [m for m in log if m.query_kind == kind]
    if not rows:
        return MetricsSummary(kind, 0, None, None, None, None, 0.0)
    ors = [m.or_time for m in rows if m.or_time is not None]
    chats = [m.chatbot_time for m in rows if m.chatbot_time is not None]
    totals = [m.total_time for m in rows]
    return MetricsSummary(
        kind=kind,
        count=len(rows),
        mean_or=statistics.mean(ors) if ors else None,
        mean_chatbot=statistics.mean(chats) if chats else None,
        mean_processing=statistics.mean(m.processing_time for m in rows),
        mean_total=statistics.mean(totals),
        stddev_total=statistics.stdev(totals) if len(totals) > 1 else 0.0,
    )


DEFAULT_FILLER_TEXTS = ("let me see, let me think about it",)

# Table-calibrated defaults: fixed engine work charged per query kind.
DEFAULT_PROCESSING = {
    QueryKind.ANCHOR_LOAD: 0.5,
    QueryKind.GENERAL: 1.0,
    QueryKind.OBJECT_QUERY: 1.0,
}


@dataclass(frozen=True)
class EngineConfig:
    fsm: fsm.FsmConfig = field(default_factory=fsm.FsmConfig)
    endpoint: Optional[EndpointConfig] = None
    filler_threshold: float = 2.5
    filler_texts: tuple[str, ...] = DEFAULT_FILLER_TEXTS
    processing_budget: float = 1.0
    # Expected recognition latency; above filler_threshold the character
    # stalls with a filler performance while vision runs.
    expected_vision_latency: float = 5.35
    min_object_confidence: float = 0.6

    def __post_init__(self):
        if self.filler_threshold <= 0:
            raise ValueError("filler_threshold must be positive")
        if not self.filler_texts:
            raise ValueError("at least one filler text is required")
        if self.processing_budget < 0:
            raise ValueError("processing_budget must be >= 0")


def load_engine_config(path=None, env=os.environ) -> EngineConfig:
    """Engine config file plus environment overrides for the endpoint.

    Schema in docs/FORMATS.md; GUIDEBOT_VISION_URL and
    GUIDEBOT_VISION_TIMEOUT override the endpoint section.
    """
    doc: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    fsm_doc = doc.get("fsm", {})
    fsm_config = fsm.FsmConfig(
        dwell_threshold=float(fsm_doc.get("dwell_threshold", 4.0)),
        greeting_silence_delay=float(fsm_doc.get("greeting_silence_delay", 3.0)),
        end_silence_timeout=float(fsm_doc.get("end_silence_timeout", 5.0)),
        end_of_utterance_window=float(fsm_doc.get("end_of_utterance_window", 1.2)),
        greeting_text=fsm_doc.get("greeting_text", fsm.FsmConfig().greeting_text),
        trigger_commands=frozenset(
            fsm_doc.get("trigger_commands", sorted(fsm.DEFAULT_TRIGGER_COMMANDS))
        ),
    )
    endpoint = None
    ep_doc = dict(doc.get("endpoint", {}))
    url = env.get("GUIDEBOT_VISION_URL", ep_doc.get("url"))
    if url:
        endpoint = EndpointConfig(
            endpoint_url=url,
            timeout=float(env.get("GUIDEBOT_VISION_TIMEOUT", ep_doc.get("timeout", 10.0))),
            retries=int(ep_doc.get("retries", 1)),
        )
    filler_doc = doc.get("filler", {})
    return EngineConfig(
        fsm=fsm_config,
        endpoint=endpoint,
        filler_threshold=float(filler_doc.get("threshold", 2.5)),
        filler_texts=tuple(filler_doc.get("texts", DEFAULT_FILLER_TEXTS)),
        processing_budget=float(doc.get("processing_budget", 1.0)),
        expected_vision_latency=float(doc.get("expected_vision_latency", 5.35)),
        min_object_confidence=float(doc.get("min_object_confidence", 0.6)),
    )


# --------------------------------------------------------------------------
# Outputs pushed to clients (the service numbers them per session).


@dataclass(frozen=True)
class StateChanged:
    state: fsm.InteractionState
    t: float


@dataclass(frozen=True)
class AgentPerformance:
    timeline: PerformanceTimeline
    text: str
    is_filler: bool
    t: float


@dataclass(frozen=True)
class MetricsUpdated:
    metrics: QueryMetrics
    t: float


@dataclass(frozen=True)
class RoomResolved:
    room_id: str
    anchors: tuple[Anchor, ...]
    t: float


@dataclass(frozen=True)
class SessionEnded:
    t: float


OutputEvent = Union[StateChanged, AgentPerformance, MetricsUpdated, RoomResolved, SessionEnded]


# --------------------------------------------------------------------------
# Service adapters. The engine sees (result, seconds) pairs; where the
# seconds come from (samples, constants, the wall clock) is the adapter's
# business, which keeps simulated and live sessions on one code path.


@dataclass
class FixedLatencyServices:
    """Deterministic constants; the unit-test workhorse."""

    vision: object  # anything with recognize(scene_ref) -> RecognitionResult
    kb: KnowledgeBase
    lexicon: SentimentLexicon
    vision_seconds: float = 0.0
    chatbot_seconds: float = 0.0
    processing: dict[QueryKind, float] = field(
        default_factory=lambda: dict(DEFAULT_PROCESSING)
    )

    def recognize(self, scene_ref: str):
        return self.vision.recognize(scene_ref), self.vision_seconds

    def chat(self, query: Query, context: DialogueContext):
        reply, new_context = respond(query, context, self.kb, self.lexicon)
        return reply, new_context, self.chatbot_seconds

    def processing_time(self, kind: QueryKind) -> float:
        return self.processing[kind]


@dataclass
class MeasuredServices:
    """Wall-clock measured latencies for live deployments."""

    vision: object
    kb: KnowledgeBase
    lexicon: SentimentLexicon
    processing: dict[QueryKind, float] = field(
        default_factory=lambda: dict(DEFAULT_PROCESSING)
    )

    def recognize(self, scene_ref: str):
        started = time.monotonic()
        result = self.vision.recognize(scene_ref)
        return result, time.monotonic() - started

    def chat(self, query: Query, context: DialogueContext):
        started = time.monotonic()
        reply, new_context = respond(query, context, self.kb, self.lexicon)
        return reply, new_context, time.monotonic() - started

    def processing_time(self, kind: QueryKind) -> float:
        return self.processing[kind]


# --------------------------------------------------------------------------
# Composer asset bundle.


@dataclass(frozen=True)
class PerformanceAssets:
    table: MappingTable
    library: ClipLibrary
    phonemes: PhonemeLexicon
    visemes: VisemeMap
    rate_wpm: float = 150.0
    minimum: float = 0.5

    def compose(self, reply: Reply) -> PerformanceTimeline:
        return assemble(
            reply,
            self.table,
            self.library,
            self.phonemes,
            self.visemes,
            self.rate_wpm,
            self.minimum,
        )


def asset_path(name: str) -> str:
    return str(resources.files("guidebot") / "assets" / name)


def default_assets() -> PerformanceAssets:
    return PerformanceAssets(
        table=load_mapping(asset_path("mapping.json")),
        library=load_clips(asset_path("clips.json")),
        phonemes=load_phonemes(asset_path("phonemes.json")),
        visemes=load_visemes(asset_path("visemes.json")),
    )


def default_kb() -> KnowledgeBase:
    return load_kb(asset_path("kb.json"))


def default_lexicon() -> SentimentLexicon:
    return load_lexicon(asset_path("lexicon.json"))


# --------------------------------------------------------------------------
# Session state.


@dataclass
class Session:
    id: str
    fsm_state: fsm.InteractionState = field(default_factory=fsm.Idle)
    dialogue_context: DialogueContext = field(default_factory=DialogueContext)
    active_room: Optional[str] = None
    loaded_anchors: list[Anchor] = field(default_factory=list)
    clock: float = 0.0
    metrics_log: list[QueryMetrics] = field(default_factory=list)
    gaze_target: fsm.GazeTarget = field(default_factory=fsm.NoTarget)
    current_scene: str = "void/overview"  # what the headset camera sees now
    ended: bool = False
    # One record per event fed through the FSM; the replay and the
    # service-equivalence checks compare these traces byte for byte.
    trace: list[dict] = field(default_factory=list)
    filler_count: int = 0
    pending_object: Optional[str] = None
    pending_or_time: Optional[float] = None
    pending_error: Optional[VisionError] = None
    pending_query_started_at: Optional[float] = None


_APOLOGIES = {
    Timeout: "Sorry, my eyes are a little slow right now. Could you show me once more?",
    EndpointError: "Sorry, I cannot see clearly at the moment. Please try again.",
    MalformedResponse: "Sorry, I could not make sense of what I saw.",
}
_GENERIC_APOLOGY = "Sorry, something went wrong on my side. Could you repeat that?"


def apology_text(error: Exception) -> str:
    return _APOLOGIES.get(type(error), _GENERIC_APOLOGY)


class Engine:
    """Owns the store and services; drives one or more sessions."""

    def __init__(
        self,
        config: EngineConfig,
        services,
        assets: PerformanceAssets,
        store: AnchorStore,
    ):
        self.config = config
        self.services = services
        self.assets = assets
        self.store = store

    def new_session(self, session_id: str) -> Session:
        return Session(id=session_id)

    # -- event pipeline ----------------------------------------------------

    def submit_event(self, session: Session, event: fsm.UserEvent) -> list[OutputEvent]:
        if session.ended:
            raise SessionEndedError(f"session {session.id} has ended")
        session.clock = max(session.clock, event.t)
        self._track_gaze(session, event)
        actions, outputs = self._apply_event(session, event)
        for action in actions:
            outputs.extend(self._handle_action(session, action))
        return outputs

    def _track_gaze(self, session: Session, event: fsm.UserEvent) -> None:
        if isinstance(event, fsm.GazeOn):
            session.gaze_target = event.target
            if isinstance(event.target, fsm.WorldRay) and event.target.scene_ref:
                session.current_scene = event.target.scene_ref
        elif isinstance(event, fsm.GazeOff):
            session.gaze_target = fsm.NoTarget()

    def _apply_event(
        self, session: Session, event: fsm.UserEvent
    ) -> tuple[list[fsm.FsmAction], list[OutputEvent]]:
        old = session.fsm_state
        new_state, actions = fsm.step(old, event, self.config.fsm)
        session.fsm_state = new_state
        session.trace.append(
            {
                "t": event.t,
                "event": wire.event_to_dict(event),
                "actions": [wire.action_to_dict(a) for a in actions],
                "state": fsm.state_name(new_state),
            }
        )
        outputs: list[OutputEvent] = []
        if fsm.state_name(new_state) != fsm.state_name(old):
            outputs.append(StateChanged(state=new_state, t=session.clock))
        return actions, outputs

    # -- action handlers ---------------------------------------------------

    def _handle_action(self, session: Session, action: fsm.FsmAction) -> list[OutputEvent]:
        if isinstance(action, fsm.EmitGreeting):
            return [self._say(session, action.text)]
        if isinstance(action, fsm.CaptureGazeTarget):
            return self._capture_gaze(session)
        if isinstance(action, fsm.SubmitQuery):
            return self._submit_query(session, action)
        if isinstance(action, fsm.EndConversation):
            session.ended = True
            return [SessionEnded(t=session.clock)]
        # Start/StopRecognizer stay engine-internal.
        return []

    def _say(self, session: Session, text: str, *, neutral: bool = False) -> AgentPerformance:
        # Apologies and clarifications carry a pinned (Neutral, Low) face;
        # everything else goes through the sentiment engine.
        if neutral:
            reply = Reply(text, SentimentClass.NEUTRAL, SentimentLevel.LOW)
        else:
            reply = Reply(text, *classify_sentiment(text, self.services.lexicon))
        return AgentPerformance(
            timeline=self.assets.compose(reply),
            text=reply.text,
            is_filler=False,
            t=session.clock,
        )

    def _filler(self, session: Session) -> AgentPerformance:
        text = self.config.filler_texts[session.filler_count % len(self.config.filler_texts)]
        session.filler_count += 1
        reply = Reply(text, SentimentClass.NEUTRAL, SentimentLevel.LOW)
        return AgentPerformance(
            timeline=self.assets.compose(reply),
            text=text,
            is_filler=True,
            t=session.clock,
        )

    def _capture_gaze(self, session: Session) -> list[OutputEvent]:
        session.pending_object = None
        session.pending_or_time = None
        session.pending_error = None
        session.pending_query_started_at = session.clock
        target = session.gaze_target
        if isinstance(target, fsm.WorldRay):
            hit = hit_test(session.loaded_anchors, target.origin, target.direction)
            if hit is not None:
                session.pending_object = hit.object_label
                return []
        scene = session.current_scene
        if isinstance(target, fsm.WorldRay) and target.scene_ref:
            scene = target.scene_ref
        outputs: list[OutputEvent] = []
        if self.config.expected_vision_latency > self.config.filler_threshold:
            outputs.append(self._filler(session))
            session.fsm_state = fsm.with_filler(session.fsm_state)
        try:
            result, seconds = self.services.recognize(scene)
        except VisionError as exc:
            session.pending_error = exc
            return outputs
        session.clock += seconds
        session.pending_or_time = seconds
        if result.label and result.confidence >= self.config.min_object_confidence:
            session.pending_object = result.label
        return outputs

    def _submit_query(self, session: Session, action: fsm.SubmitQuery) -> list[OutputEvent]:
        kind = QueryKind.OBJECT_QUERY if action.needs_object else QueryKind.GENERAL

        if action.needs_object and session.pending_error is not None:
            error = session.pending_error
            self._clear_pending(session)
            performance = self._say(session, apology_text(error), neutral=True)
            return [performance] + self._perform_speech(session, performance.timeline)

        object_label = session.pending_object if action.needs_object else None
        or_time = session.pending_or_time if action.needs_object else None
        self._clear_pending(session)
        try:
            reply, new_context, chat_seconds = self.services.chat(
                Query(action.text, object_label), session.dialogue_context
            )
        except Exception:
            performance = self._say(session, _GENERIC_APOLOGY, neutral=True)
            return [performance] + self._perform_speech(session, performance.timeline)
        session.dialogue_context = new_context
        processing = self.services.processing_time(kind)
        session.clock += chat_seconds + processing
        metrics = QueryMetrics(
            query_kind=kind,
            or_time=or_time,
            chatbot_time=chat_seconds,
            processing_time=processing,
            total_time=(or_time or 0.0) + chat_seconds + processing,
        )
        session.metrics_log.append(metrics)
        timeline = self.assets.compose(reply)
        outputs: list[OutputEvent] = [
            AgentPerformance(timeline=timeline, text=reply.text, is_filler=False, t=session.clock),
            MetricsUpdated(metrics=metrics, t=session.clock),
        ]
        outputs.extend(self._perform_speech(session, timeline))
        return outputs

    def _clear_pending(self, session: Session) -> None:
        session.pending_object = None
        session.pending_or_time = None
        session.pending_error = None
        session.pending_query_started_at = None

    def _perform_speech(self, session: Session, timeline: PerformanceTimeline) -> list[OutputEvent]:
        """Walk the FSM through the reply playback so follow-up listening
        starts when the character stops talking."""
        reply_t = session.clock
        done_t = reply_t + timeline.total_duration
        outputs: list[OutputEvent] = []
        _, out = self._apply_event(session, fsm.AgentSpeechStarted(until=done_t, t=reply_t))
        outputs.extend(out)
        session.clock = max(session.clock, done_t)
        _, out = self._apply_event(session, fsm.AgentSpeechDone(t=done_t))
        outputs.extend(out)
        # If the user is already looking away the end-of-conversation
        # countdown must start now, not at their next gaze change.
        if not isinstance(session.gaze_target, fsm.CharacterTarget):
            actions, out = self._apply_event(session, fsm.GazeOff(t=done_t))
            outputs.extend(out)
            for action in actions:
                outputs.extend(self._handle_action(session, action))
        return outputs

    # -- room initialization -------------------------------------------------

    def initialize_room(
        self,
        session: Session,
        *,
        scene_refs: Optional[list[str]] = None,
        observed_labels: Optional[set[str]] = None,
    ) -> list[OutputEvent]:
        """Recognize the surroundings, pick the room, load its anchors.

        Vision is charged per scene_ref; passing observed_labels instead
        skips vision (and then no or_time is recorded).
        """
        if session.ended:
            raise SessionEndedError(f"session {session.id} has ended")
        labels: set[str] = set(observed_labels or ())
        or_time: Optional[float] = None
        if scene_refs:
            total = 0.0
            for ref in scene_refs:
                try:
                    result, seconds = self.services.recognize(ref)
                except VisionError as exc:
                    return [self._say(session, apology_text(exc), neutral=True)]
                total += seconds
                session.clock += seconds
                if result.label and result.confidence >= self.config.min_object_confidence:
                    labels.add(result.label)
            or_time = total
        processing = self.services.processing_time(QueryKind.ANCHOR_LOAD)
        session.clock += processing
        try:
            resolution = resolve_room(self.store, labels)
        except EmptyObservation:
            resolution = Unknown()
        if isinstance(resolution, str):
            session.active_room = resolution
            session.loaded_anchors = load_room(self.store, resolution)
            if resolution and session.current_scene == "void/overview":
                session.current_scene = f"{resolution}/overview"
            metrics = QueryMetrics(
                query_kind=QueryKind.ANCHOR_LOAD,
                or_time=or_time,
                chatbot_time=None,
                processing_time=processing,
                total_time=(or_time or 0.0) + processing,
            )
            session.metrics_log.append(metrics)
            return [
                RoomResolved(
                    room_id=resolution,
                    anchors=tuple(session.loaded_anchors),
                    t=session.clock,
                ),
                MetricsUpdated(metrics=metrics, t=session.clock),
            ]
        if isinstance(resolution, Ambiguous):
            text = (
                "I know a few rooms that look like this one. "
                "Could you show me something unique to this room?"
            )
        else:
            text = "I do not recognize this room yet. Could you look around a bit?"
        return [self._say(session, text, neutral=True)]
