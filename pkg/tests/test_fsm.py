"""Interaction state machine: timing boundaries, trigger commands, and the
randomized property suite (dwell gating, single greeting, guaranteed end,
replay determinism)."""

import math
import random

import pytest

from guidebot import fsm

CFG = fsm.FsmConfig()


def drive(events, config=CFG, state=None):
    state = state or fsm.Idle()
    log = []
    for event in events:
        state, actions = fsm.step(state, event, config)
        log.append((state, actions))
    return state, log


def actions_of(log):
    return [a for _, acts in log for a in acts]


# --------------------------------------------------------------------------
# Dwell and greeting timing.


def test_dwell_threshold_is_inclusive():
    state, _ = drive([fsm.GazeOn(fsm.CharacterTarget(), t=0.0), fsm.Tick(3.9)])
    assert isinstance(state, fsm.Dwelling)
    state, log = drive([fsm.GazeOn(fsm.CharacterTarget(), t=0.0), fsm.Tick(4.0)])
    assert isinstance(state, fsm.Listening)
    assert actions_of(log) == [fsm.StartRecognizer()]


def test_gaze_away_resets_the_dwell_clock():
    events = [
        fsm.GazeOn(fsm.CharacterTarget(), t=0.0),
        fsm.GazeOff(t=2.0),
        fsm.GazeOn(fsm.CharacterTarget(), t=2.5),
        fsm.Tick(5.0),  # only 2.5 s of the second dwell
    ]
    state, log = drive(events)
    assert isinstance(state, fsm.Dwelling)
    assert actions_of(log) == []


def test_gazing_elsewhere_breaks_the_dwell():
    ray = fsm.WorldRay((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    state, _ = drive([fsm.GazeOn(fsm.CharacterTarget(), t=0.0), fsm.GazeOn(ray, t=1.0)])
    assert isinstance(state, fsm.Idle)


def listening_at_4():
    return [fsm.GazeOn(fsm.CharacterTarget(), t=0.0), fsm.Tick(4.0)]


def test_greeting_fires_after_three_silent_seconds_only_once():
    state, log = drive(listening_at_4() + [fsm.Tick(6.9), fsm.Tick(7.0), fsm.Tick(30.0)])
    greetings = [a for a in actions_of(log) if isinstance(a, fsm.EmitGreeting)]
    assert len(greetings) == 1
    assert greetings[0].text == "Hello, do you need help?"
    assert isinstance(state, fsm.Listening) and state.greeted


def test_user_sound_defers_the_greeting():
    state, log = drive(listening_at_4() + [fsm.SpeechStarted(t=6.5), fsm.Tick(9.0)])
    assert not any(isinstance(a, fsm.EmitGreeting) for a in actions_of(log))
    _, log = drive(listening_at_4() + [fsm.SpeechStarted(t=6.5), fsm.Tick(9.5)])
    assert any(isinstance(a, fsm.EmitGreeting) for a in actions_of(log))


# --------------------------------------------------------------------------
# Queries.


def test_speech_final_submits_a_general_query():
    state, log = drive(listening_at_4() + [fsm.SpeechFinal("how many flowers", t=5.0)])
    assert isinstance(state, fsm.AwaitingReply)
    assert log[-1][1] == [fsm.SubmitQuery(text="how many flowers", needs_object=False)]


def test_trigger_phrase_in_speech_final_becomes_an_object_query():
    _, log = drive(listening_at_4() + [fsm.SpeechFinal("What is this?", t=5.0)])
    assert log[-1][1] == [
        fsm.CaptureGazeTarget(),
        fsm.SubmitQuery(text="what is this", needs_object=True),
    ]


@pytest.mark.parametrize(
    "prefix",
    [
        [],  # Idle
        [fsm.GazeOn(fsm.CharacterTarget(), t=0.0)],  # Dwelling
        listening_at_4(),  # Listening
        listening_at_4() + [fsm.SpeechFinal("hello", t=5.0)],  # AwaitingReply
    ],
)
def test_voice_command_works_from_any_live_state(prefix):
    state, log = drive(prefix + [fsm.VoiceCommand("Tell me about this!", t=6.0)])
    assert isinstance(state, fsm.AwaitingReply)
    assert log[-1][1] == [
        fsm.CaptureGazeTarget(),
        fsm.SubmitQuery(text="tell me about this", needs_object=True),
    ]


def test_unrecognized_voice_command_self_loops():
    state, log = drive(listening_at_4() + [fsm.VoiceCommand("open the pod bay doors", t=5.0)])
    assert isinstance(state, fsm.Listening)
    assert log[-1][1] == []


def test_normalize_command():
    assert fsm.normalize_command("What is this?") == "what is this"
    assert fsm.normalize_command("  TELL me   ABOUT this!! ") == "tell me about this"
    assert fsm.normalize_command("thanks...") == "thanks"


# --------------------------------------------------------------------------
# Conversation end.


def test_gaze_out_plus_silence_ends_the_conversation():
    events = listening_at_4() + [fsm.GazeOff(t=10.0), fsm.Tick(14.9)]
    state, _ = drive(events)
    assert isinstance(state, fsm.Listening)
    state, log = drive(events + [fsm.Tick(15.0)])
    assert isinstance(state, fsm.Ended)
    assert log[-1][1] == [fsm.StopRecognizer(), fsm.EndConversation()]


def test_gazing_back_cancels_the_end_countdown():
    events = listening_at_4() + [
        fsm.GazeOff(t=10.0),
        fsm.GazeOn(fsm.CharacterTarget(), t=12.0),
        fsm.Tick(60.0),
    ]
    state, _ = drive(events)
    assert isinstance(state, fsm.Listening)


def test_end_countdown_runs_from_the_later_of_gaze_out_and_last_sound():
    events = listening_at_4() + [fsm.GazeOff(t=10.0), fsm.SpeechStarted(t=12.0)]
    state, _ = drive(events + [fsm.Tick(16.9)])
    assert isinstance(state, fsm.Listening)
    state, _ = drive(events + [fsm.Tick(17.0)])
    assert isinstance(state, fsm.Ended)


def test_ended_is_absorbing():
    end = listening_at_4() + [fsm.GazeOff(t=10.0), fsm.Tick(20.0)]
    probes = [
        fsm.GazeOn(fsm.CharacterTarget(), t=21.0),
        fsm.SpeechFinal("hello", t=22.0),
        fsm.VoiceCommand("what is this", t=23.0),
        fsm.Tick(99.0),
    ]
    state, log = drive(end + probes)
    assert isinstance(state, fsm.Ended)
    assert all(acts == [] for _, acts in log[len(end):])


# --------------------------------------------------------------------------
# Reply playback plumbing.


def test_agent_speech_cycle_returns_to_listening_with_greeting_spent():
    events = listening_at_4() + [
        fsm.SpeechFinal("hello", t=5.0),
        fsm.AgentSpeechStarted(until=9.0, t=5.0),
        fsm.AgentSpeechDone(t=9.0),
    ]
    state, _ = drive(events)
    assert state == fsm.Listening(listening_since=9.0, greeted=True)


def test_unknown_pairs_self_loop():
    for state, event in [
        (fsm.Idle(), fsm.SpeechFinal("hi", t=1.0)),
        (fsm.Idle(), fsm.AgentSpeechDone(t=1.0)),
        (fsm.Dwelling(0.0), fsm.SpeechStarted(t=1.0)),
        (fsm.AwaitingReply(), fsm.Tick(99.0)),
        (fsm.AgentSpeaking(until=9.0), fsm.GazeOff(t=1.0)),
    ]:
        new_state, actions = fsm.step(state, event, CFG)
        assert new_state == state and actions == []


def test_with_filler_marks_only_awaiting_reply():
    assert fsm.with_filler(fsm.AwaitingReply()) == fsm.AwaitingReply(filler_active=True)
    assert fsm.with_filler(fsm.Idle()) == fsm.Idle()


# --------------------------------------------------------------------------
# Randomized property suite. Shadow checks reconstruct the guarantees from
# the raw event list alone, without reusing the machine's internals.

TEXT_POOL = (
    "what is this",
    "What is this?",
    "tell me about this",
    "hello there",
    "how many flowers are here",
    "thanks",
)


def random_events(rng):
    t = 0.0
    events = []
    for _ in range(rng.randint(1, 50)):
        t += rng.choice((0.0, 0.3, 1.0, 2.2, 3.0, 4.0, 5.5))
        roll = rng.randrange(9)
        if roll == 0:
            events.append(fsm.GazeOn(fsm.CharacterTarget(), t=t))
        elif roll == 1:
            d = [rng.gauss(0, 1) for _ in range(3)]
            n = math.sqrt(sum(c * c for c in d)) or 1.0
            ray = fsm.WorldRay((0.0, 0.0, 0.0), tuple(c / n for c in d))
            events.append(fsm.GazeOn(ray, t=t))
        elif roll == 2:
            events.append(fsm.GazeOn(fsm.NoTarget(), t=t))
        elif roll == 3:
            events.append(fsm.GazeOff(t=t))
        elif roll == 4:
            events.append(fsm.SpeechStarted(t=t))
        elif roll == 5:
            events.append(fsm.SpeechFinal(rng.choice(TEXT_POOL), t=t))
        elif roll == 6:
            events.append(fsm.Tick(now=t))
        elif roll == 7:
            events.append(fsm.VoiceCommand(rng.choice(TEXT_POOL), t=t))
        else:
            if rng.random() < 0.5:
                events.append(fsm.AgentSpeechStarted(until=t + rng.uniform(0.5, 6.0), t=t))
            else:
                events.append(fsm.AgentSpeechDone(t=t))
    return events


def check_start_recognizer_needs_dwell(events, log):
    """StartRecognizer demands >= 4.0 s of uninterrupted character gaze."""
    dwell_since = None
    for event, (_, actions) in zip(events, log):
        if isinstance(event, fsm.GazeOn):
            if isinstance(event.target, fsm.CharacterTarget):
                if dwell_since is None:
                    dwell_since = event.t
            else:
                dwell_since = None
        elif isinstance(event, fsm.GazeOff):
            dwell_since = None
        for action in actions:
            if isinstance(action, fsm.StartRecognizer):
                assert dwell_since is not None, "recognizer started without dwell"
                assert event.t - dwell_since >= CFG.dwell_threshold - 1e-9


def quiescence_suffix(t):
    return [
        fsm.AgentSpeechDone(t=t),
        fsm.GazeOff(t=t + 0.1),
        fsm.Tick(now=t + 0.1 + CFG.end_silence_timeout + 1.0),
    ]


def test_random_trace_properties():
    rng = random.Random(4242)
    traces = 0
    endings_checked = 0
    for _ in range(10_000):
        events = random_events(rng)
        state, log = drive(events)

        check_start_recognizer_needs_dwell(events, log)

        greetings = [a for a in actions_of(log) if isinstance(a, fsm.EmitGreeting)]
        assert len(greetings) <= 1, "second greeting in one conversation"

        # Gaze-out plus sustained silence always finishes a live conversation.
        if isinstance(state, (fsm.Listening, fsm.AwaitingReply, fsm.AgentSpeaking)):
            tail = quiescence_suffix(events[-1].t + 1.0)
            final, _ = drive(tail, state=state)
            assert isinstance(final, fsm.Ended)
            endings_checked += 1

        # Replay determinism: identical inputs, identical decision log.
        state2, log2 = drive(events)
        assert state2 == state
        assert log2 == log
        traces += 1
    assert traces == 10_000
    assert endings_checked > 1000
