"""Dict forms of FSM events, states, and actions.

One canonical encoding shared by trace logs, the session service, and the
replay tool, so a recorded trace replays bit-for-bit. Field names here are
the wire contract; see docs/API.md.
"""

from __future__ import annotations

from typing import Any

from . import fsm


class MalformedEvent(ValueError):
    """Raised when a wire payload cannot be decoded into a UserEvent."""


def gaze_target_to_dict(target: fsm.GazeTarget) -> dict[str, Any]:
    if isinstance(target, fsm.CharacterTarget):
        return {"kind": "character"}
    if isinstance(target, fsm.WorldRay):
        encoded: dict[str, Any] = {
            "kind": "world_ray",
            "origin": list(target.origin),
            "direction": list(target.direction),
        }
        if target.scene_ref is not None:
            encoded["scene_ref"] = target.scene_ref
        return encoded
    return {"kind": "none"}


def gaze_target_from_dict(data: dict[str, Any]) -> fsm.GazeTarget:
    kind = data.get("kind")
    if kind == "character":
        return fsm.CharacterTarget()
    if kind == "world_ray":
        try:
            origin = tuple(float(v) for v in data["origin"])
            direction = tuple(float(v) for v in data["direction"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEvent(f"bad world_ray target: {exc}") from exc
        if len(origin) != 3 or len(direction) != 3:
            raise MalformedEvent("world_ray origin/direction must be 3-vectors")
        scene_ref = data.get("scene_ref")
        try:
            return fsm.WorldRay(
                origin=origin,
                direction=direction,
                scene_ref=None if scene_ref is None else str(scene_ref),
            )
        except ValueError as exc:
            raise MalformedEvent(str(exc)) from exc
    if kind == "none":
        return fsm.NoTarget()
    raise MalformedEvent(f"unknown gaze target kind {kind!r}")


def event_to_dict(event: fsm.UserEvent) -> dict[str, Any]:
    if isinstance(event, fsm.GazeOn):
        return {"type": "gaze_on", "t": event.t, "target": gaze_target_to_dict(event.target)}
    if isinstance(event, fsm.GazeOff):
        return {"type": "gaze_off", "t": event.t}
    if isinstance(event, fsm.SpeechStarted):
        return {"type": "speech_started", "t": event.t}
    if isinstance(event, fsm.SpeechFinal):
        return {"type": "speech_final", "t": event.t, "text": event.text}
    if isinstance(event, fsm.Tick):
        return {"type": "tick", "t": event.now}
    if isinstance(event, fsm.VoiceCommand):
        return {"type": "voice_command", "t": event.t, "text": event.text}
    if isinstance(event, fsm.AgentSpeechStarted):
        return {"type": "agent_speech_started", "t": event.t, "until": event.until}
    if isinstance(event, fsm.AgentSpeechDone):
        return {"type": "agent_speech_done", "t": event.t}
    raise TypeError(f"not a UserEvent: {event!r}")


def event_from_dict(data: dict[str, Any]) -> fsm.UserEvent:
    etype = data.get("type")
    try:
        t = float(data["t"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedEvent(f"event is missing a numeric 't': {exc}") from exc
    try:
        if etype == "gaze_on":
            return fsm.GazeOn(target=gaze_target_from_dict(data["target"]), t=t)
        if etype == "gaze_off":
            return fsm.GazeOff(t=t)
        if etype == "speech_started":
            return fsm.SpeechStarted(t=t)
        if etype == "speech_final":
            return fsm.SpeechFinal(text=str(data["text"]), t=t)
        if etype == "tick":
            return fsm.Tick(now=t)
        if etype == "voice_command":
            return fsm.VoiceCommand(text=str(data["text"]), t=t)
        if etype == "agent_speech_started":
            return fsm.AgentSpeechStarted(until=float(data["until"]), t=t)
        if etype == "agent_speech_done":
            return fsm.AgentSpeechDone(t=t)
    except MalformedEvent:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedEvent(f"bad {etype} event: {exc}") from exc
    raise MalformedEvent(f"unknown event type {etype!r}")


def state_to_dict(state: fsm.InteractionState) -> dict[str, Any]:
    out: dict[str, Any] = {"state": fsm.state_name(state)}
    if isinstance(state, fsm.Dwelling):
        out["dwell_started_at"] = state.dwell_started_at
    elif isinstance(state, fsm.Listening):
        out.update(
            listening_since=state.listening_since,
            last_user_sound_at=state.last_user_sound_at,
            greeted=state.greeted,
            gaze_away_since=state.gaze_away_since,
        )
    elif isinstance(state, fsm.AwaitingReply):
        out["filler_active"] = state.filler_active
    elif isinstance(state, fsm.AgentSpeaking):
        out["until"] = state.until
    return out


def action_to_dict(action: fsm.FsmAction) -> dict[str, Any]:
    if isinstance(action, fsm.StartRecognizer):
        return {"action": "start_recognizer"}
    if isinstance(action, fsm.StopRecognizer):
        return {"action": "stop_recognizer"}
    if isinstance(action, fsm.EmitGreeting):
        return {"action": "emit_greeting", "text": action.text}
    if isinstance(action, fsm.CaptureGazeTarget):
        return {"action": "capture_gaze_target"}
    if isinstance(action, fsm.SubmitQuery):
        return {"action": "submit_query", "text": action.text, "needs_object": action.needs_object}
    if isinstance(action, fsm.EndConversation):
        return {"action": "end_conversation"}
    raise TypeError(f"not an FsmAction: {action!r}")
