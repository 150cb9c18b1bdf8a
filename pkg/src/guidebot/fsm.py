"""Gaze-and-speech interaction state machine.

The machine decides when the speech recognizer runs, when the character
greets proactively, when a query is submitted, and when a conversation
ends. `step` is a pure function: the enclosing session owns the state and
feeds it timestamped events from a single logical loop.

Timing rules (all configurable):
  * gazing at the character for `dwell_threshold` seconds starts listening
  * `greeting_silence_delay` seconds of initial silence triggers one greeting
  * gaze leaving the character plus `end_silence_timeout` seconds of
    silence ends the conversation
  * recognized trigger commands ("what is this", ...) capture the current
    gaze target and submit an object query from any live state
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

# --------------------------------------------------------------------------
# Gaze targets


@dataclass(frozen=True)
class CharacterTarget:
    """Gaze rests on the virtual character."""


@dataclass(frozen=True)
class WorldRay:
    """Gaze ray into the scene, in room-local coordinates. scene_ref names
    the captured view a recognizer would see along this ray."""

    origin: tuple[float, float, float]
    direction: tuple[float, float, float]
    scene_ref: Optional[str] = None

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"gaze direction must be unit length, got norm {norm}")


@dataclass(frozen=True)
class NoTarget:
    """Gaze rests on nothing trackable."""


GazeTarget = Union[CharacterTarget, WorldRay, NoTarget]


# --------------------------------------------------------------------------
# Events. Every event carries the session-clock time `t` at which it
# occurred; Tick events are pure clock advances.


@dataclass(frozen=True)
class GazeOn:
    target: GazeTarget
    t: float


@dataclass(frozen=True)
class GazeOff:
    t: float


@dataclass(frozen=True)
class SpeechStarted:
    t: float


@dataclass(frozen=True)
class SpeechFinal:
    text: str
    t: float

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("SpeechFinal.text must be non-empty")


@dataclass(frozen=True)
class Tick:
    now: float

    @property
    def t(self) -> float:
        return self.now


@dataclass(frozen=True)
class VoiceCommand:
    text: str
    t: float


@dataclass(frozen=True)
class AgentSpeechStarted:
    """Engine-internal: the character began a (non-filler) reply performance.

    Emitted by the session loop, never by clients, so that AgentSpeaking is
    reachable through `step` alone and recorded traces replay exactly.
    """

    until: float
    t: float


@dataclass(frozen=True)
class AgentSpeechDone:
    t: float


UserEvent = Union[
    GazeOn,
    GazeOff,
    SpeechStarted,
    SpeechFinal,
    Tick,
    VoiceCommand,
    AgentSpeechStarted,
    AgentSpeechDone,
]


# --------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class Idle:
    """No engagement with the character."""


@dataclass(frozen=True)
class Dwelling:
    dwell_started_at: float


@dataclass(frozen=True)
class Listening:
    listening_since: float
    last_user_sound_at: Optional[float] = None
    greeted: bool = False
    # Set while gaze is off the character; the conversation-end countdown
    # runs from max(gaze_away_since, last_user_sound_at).
    gaze_away_since: Optional[float] = None


@dataclass(frozen=True)
class AwaitingReply:
    filler_active: bool = False


@dataclass(frozen=True)
class AgentSpeaking:
    until: float


@dataclass(frozen=True)
class Ended:
    """Absorbing: no event leads out of Ended."""


InteractionState = Union[Idle, Dwelling, Listening, AwaitingReply, AgentSpeaking, Ended]


# --------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class StartRecognizer:
    pass


@dataclass(frozen=True)
class StopRecognizer:
    pass


@dataclass(frozen=True)
class EmitGreeting:
    text: str


@dataclass(frozen=True)
class CaptureGazeTarget:
    pass


@dataclass(frozen=True)
class SubmitQuery:
    text: str
    needs_object: bool = False

    def __post_init__(self):
        if not self.text:
            raise ValueError("SubmitQuery.text must be non-empty")


@dataclass(frozen=True)
class EndConversation:
    pass


FsmAction = Union[
    StartRecognizer,
    StopRecognizer,
    EmitGreeting,
    CaptureGazeTarget,
    SubmitQuery,
    EndConversation,
]


DEFAULT_TRIGGER_COMMANDS = frozenset({"what is this", "tell me about this"})


@dataclass(frozen=True)
class FsmConfig:
    dwell_threshold: float = 4.0
    greeting_silence_delay: float = 3.0
    end_silence_timeout: float = 5.0
    end_of_utterance_window: float = 1.2
    greeting_text: str = "Hello, do you need help?"
    trigger_commands: frozenset[str] = DEFAULT_TRIGGER_COMMANDS

    def __post_init__(self):
        for name in (
            "dwell_threshold",
            "greeting_silence_delay",
            "end_silence_timeout",
            "end_of_utterance_window",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.trigger_commands:
            raise ValueError("trigger_commands must be non-empty")


_TERMINAL_PUNCT = re.compile(r"[\s!?.,;:]+$")
_WS = re.compile(r"\s+")


def normalize_command(text: str) -> str:
    """Lowercase, trim, drop terminal punctuation, collapse whitespace."""
    out = _TERMINAL_PUNCT.sub("", text.strip().lower())
    return _WS.sub(" ", out).strip()


def step(
    state: InteractionState, event: UserEvent, config: FsmConfig
) -> tuple[InteractionState, list[FsmAction]]:
    """Apply one event; returns the next state and the actions to run.

    Pure and total: unknown (state, event) pairs self-loop with no actions,
    so a noisy event stream can never wedge a session.
    """
    if isinstance(state, Ended):
        return state, []

    # Trigger commands work from any live state; the recognizer for them is
    # always-on keyword spotting, separate from the dictation recognizer.
    if isinstance(event, VoiceCommand):
        command = normalize_command(event.text)
        if command in config.trigger_commands:
            return AwaitingReply(), [
                CaptureGazeTarget(),
                SubmitQuery(text=command, needs_object=True),
            ]
        return state, []

    if isinstance(state, Idle):
        if isinstance(event, GazeOn) and isinstance(event.target, CharacterTarget):
            return Dwelling(dwell_started_at=event.t), []
        return state, []

    if isinstance(state, Dwelling):
        if isinstance(event, GazeOn):
            if isinstance(event.target, CharacterTarget):
                return state, []
            return Idle(), []  # gaze moved elsewhere: dwell is continuous
        if isinstance(event, GazeOff):
            return Idle(), []
        if isinstance(event, Tick):
            if event.now - state.dwell_started_at >= config.dwell_threshold:
                return Listening(listening_since=event.now), [StartRecognizer()]
            return state, []
        return state, []

    if isinstance(state, Listening):
        if isinstance(event, SpeechStarted):
            return (
                Listening(
                    listening_since=state.listening_since,
                    last_user_sound_at=event.t,
                    greeted=state.greeted,
                    gaze_away_since=state.gaze_away_since,
                ),
                [],
            )
        if isinstance(event, SpeechFinal):
            text = event.text.strip()
            command = normalize_command(text)
            if command in config.trigger_commands:
                actions: list[FsmAction] = [
                    CaptureGazeTarget(),
                    SubmitQuery(text=command, needs_object=True),
                ]
            else:
                actions = [SubmitQuery(text=text, needs_object=False)]
            return AwaitingReply(), actions
        if isinstance(event, GazeOff):
            away = state.gaze_away_since if state.gaze_away_since is not None else event.t
            return (
                Listening(
                    listening_since=state.listening_since,
                    last_user_sound_at=state.last_user_sound_at,
                    greeted=state.greeted,
                    gaze_away_since=away,
                ),
                [],
            )
        if isinstance(event, GazeOn):
            if isinstance(event.target, CharacterTarget):
                away = None  # gazing back cancels the end countdown
            else:
                away = (
                    state.gaze_away_since
                    if state.gaze_away_since is not None
                    else event.t
                )
            return (
                Listening(
                    listening_since=state.listening_since,
                    last_user_sound_at=state.last_user_sound_at,
                    greeted=state.greeted,
                    gaze_away_since=away,
                ),
                [],
            )
        if isinstance(event, Tick):
            now = event.now
            if state.gaze_away_since is not None:
                silence_ref = state.gaze_away_since
                if state.last_user_sound_at is not None:
                    silence_ref = max(silence_ref, state.last_user_sound_at)
                if now - silence_ref >= config.end_silence_timeout:
                    return Ended(), [StopRecognizer(), EndConversation()]
            if not state.greeted:
                sound_ref = (
                    state.last_user_sound_at
                    if state.last_user_sound_at is not None
                    else state.listening_since
                )
                if now - sound_ref >= config.greeting_silence_delay:
                    return (
                        Listening(
                            listening_since=state.listening_since,
                            last_user_sound_at=state.last_user_sound_at,
                            greeted=True,
                            gaze_away_since=state.gaze_away_since,
                        ),
                        [EmitGreeting(config.greeting_text)],
                    )
            return state, []
        return state, []

    if isinstance(state, AwaitingReply):
        if isinstance(event, AgentSpeechStarted):
            return AgentSpeaking(until=event.until), []
        if isinstance(event, AgentSpeechDone):
            return _listening_after_speech(event.t), []
        return state, []

    if isinstance(state, AgentSpeaking):
        if isinstance(event, AgentSpeechDone):
            return _listening_after_speech(event.t), []
        return state, []

    return state, []


def _listening_after_speech(t: float) -> Listening:
    # greeted=True: once a conversation is underway the character never
    # re-opens with the proactive greeting.
    return Listening(listening_since=t, greeted=True)


def with_filler(state: InteractionState) -> InteractionState:
    """Mark that a filler performance is covering the wait for a reply."""
    if isinstance(state, AwaitingReply):
        return AwaitingReply(filler_active=True)
    return state


def state_name(state: InteractionState) -> str:
    return type(state).__name__
