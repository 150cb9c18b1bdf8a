"""Response-time study harness: seeded latency sampling, script expansion,
the 30-session corpus, and report persistence."""

import dataclasses
import json
import random

import pytest

from guidebot import fsm
from guidebot.engine import QueryKind
from guidebot.sampling import TruncatedNormal
from guidebot.simulation import (
    LatencyModel,
    Room,
    Scenario,
    SceneObject,
    ScriptError,
    ScriptStep,
    UserEventScript,
    anchored_variant,
    build_store,
    expand_script,
    latency_model_from_dict,
    load_report,
    render_report,
    report_to_dict,
    run,
    save_report,
    scenario_fixtures,
    validate_scenario,
)

# --------------------------------------------------------------------------
# Latency sampling.


def test_truncated_normal_mirrors_clamped_gauss():
    dist = TruncatedNormal(5.35, 0.7)
    a, b = random.Random(42), random.Random(42)
    for _ in range(500):
        assert dist.sample(a) == max(0.0, b.gauss(5.35, 0.7))


def test_truncated_normal_clamps_negatives_to_zero():
    dist = TruncatedNormal(0.0, 1.0)
    rng = random.Random(3)
    samples = [dist.sample(rng) for _ in range(200)]
    assert min(samples) == 0.0  # roughly half the draws clamp
    assert all(s >= 0.0 for s in samples)
    with pytest.raises(ValueError):
        TruncatedNormal(-1.0, 0.5)
    with pytest.raises(ValueError):
        TruncatedNormal(1.0, -0.5)


def test_latency_model_requires_every_query_kind():
    with pytest.raises(ValueError):
        LatencyModel(
            vision=TruncatedNormal(5.0, 0.5),
            chatbot=TruncatedNormal(2.0, 0.5),
            processing={QueryKind.GENERAL: 1.0},
        )
    with pytest.raises(ValueError):
        latency_model_from_dict(
            {
                "vision": {"mean": 5.0, "stddev": 0.5},
                "chatbot": {"mean": 2.0, "stddev": 0.5},
                "processing": {"AnchorLoad": -0.5, "General": 1.0, "ObjectQuery": 1.0},
            }
        )


def test_default_latency_model_matches_the_shipped_table(latency_model):
    assert latency_model.vision.mean == pytest.approx(5.35)
    assert latency_model.chatbot.mean == pytest.approx(2.05)
    assert latency_model.processing[QueryKind.ANCHOR_LOAD] == pytest.approx(0.5)
    assert latency_model.processing[QueryKind.OBJECT_QUERY] == pytest.approx(1.0)


# --------------------------------------------------------------------------
# Scenario plumbing.


def tiny_room():
    return Room(
        room_id="room1",
        character="guide",
        objects=(SceneObject("rose", (2.0, 0.0, 1.0)), SceneObject("tulip", (0.0, 0.0, 3.0))),
    )


def tiny_scenario(steps, copies=1):
    return Scenario(
        name="tiny",
        rooms=(tiny_room(),),
        scripts=(UserEventScript(room_id="room1", steps=tuple(steps), copies=copies),),
    )


def test_validate_scenario_rejects_unknown_rooms_and_objects():
    bad_room = Scenario(
        name="x",
        rooms=(tiny_room(),),
        scripts=(UserEventScript(room_id="room9", steps=()),),
    )
    with pytest.raises(ScriptError):
        validate_scenario(bad_room)
    with pytest.raises(ScriptError) as err:
        validate_scenario(tiny_scenario([ScriptStep(at=6.0, do="ask_about", label="cactus")]))
    assert "cactus" in str(err.value)
    with pytest.raises(ScriptError):
        validate_scenario(tiny_scenario([ScriptStep(at=6.0, do="ask_general")]))  # no text
    with pytest.raises(ScriptError):
        validate_scenario(tiny_scenario([ScriptStep(at=6.0, do="teleport")]))


def test_script_steps_must_be_time_ordered():
    with pytest.raises(ValueError):
        UserEventScript(
            room_id="room1",
            steps=(ScriptStep(at=9.0, do="tick"), ScriptStep(at=6.0, do="tick")),
        )


def test_expand_script_adds_dwell_preamble_and_silent_tail():
    from guidebot.engine import EngineConfig

    config = EngineConfig()
    script = UserEventScript(
        room_id="room1",
        steps=(
            ScriptStep(at=6.0, do="ask_general", text="hello"),
            ScriptStep(at=12.0, do="ask_about", label="rose"),
        ),
    )
    events = expand_script(script, tiny_room(), config)

    assert events[0] == fsm.GazeOn(target=fsm.CharacterTarget(), t=0.0)
    assert events[1] == fsm.Tick(now=4.0)
    assert isinstance(events[2], fsm.SpeechFinal) and events[2].t == 6.0

    gaze, command = events[3], events[4]
    assert isinstance(gaze, fsm.GazeOn)
    assert gaze.target.scene_ref == "room1/rose_view"
    norm = sum(c * c for c in gaze.target.direction)
    assert norm == pytest.approx(1.0)
    assert command == fsm.VoiceCommand(text="what is this", t=12.0)

    tail_off, tail_tick = events[-2], events[-1]
    assert isinstance(tail_off, fsm.GazeOff) and tail_off.t == 72.0
    assert isinstance(tail_tick, fsm.Tick) and tail_tick.t == 78.0


def test_expand_script_rejects_steps_inside_the_dwell_window():
    from guidebot.engine import EngineConfig

    script = UserEventScript(room_id="room1", steps=(ScriptStep(at=2.0, do="tick"),))
    with pytest.raises(ScriptError) as err:
        expand_script(script, tiny_room(), EngineConfig())
    assert "dwell" in str(err.value)


def test_build_store_signatures_only_until_anchored(scenario):
    plain = build_store(scenario)
    assert plain.anchors == ()
    assert {s.room_id for s in plain.signatures} == {"room1", "room2"}

    anchored = build_store(anchored_variant(scenario))
    assert len(anchored.anchors) == 9  # one per object across both rooms
    assert all(a.radius == 0.5 for a in anchored.anchors)
    labels = {s.room_id: s.labels for s in anchored.signatures}
    assert labels["room1"] >= {"rose", "tulip"}
    assert labels["room2"] >= {"orchid", "sunflower"}


def test_scenario_fixtures_cover_views_and_overviews(scenario):
    fixtures = scenario_fixtures(scenario)
    assert fixtures["room1/rose_view"].label == "rose"
    assert fixtures["room1/rose_view"].confidence == pytest.approx(0.92)
    assert fixtures["room1/overview"].confidence == pytest.approx(0.9)
    assert fixtures["room2/overview"].label == "orchid"
    assert len(fixtures) == 9 + 2


def test_placements_map_rooms_to_characters(scenario):
    assert scenario.placements == {"room1": "guide_rosa", "room2": "guide_flora"}


# --------------------------------------------------------------------------
# The full study run.


def test_seed0_run_reproduces_the_calibrated_timings(scenario, latency_model):
    sim = run(scenario, latency_model, seed=0)
    report = sim.report

    by_kind = {kind: report.summary(kind) for kind in QueryKind}
    assert all(s.count == 30 for s in by_kind.values())

    assert by_kind[QueryKind.ANCHOR_LOAD].mean_total == pytest.approx(5.9, abs=0.3)
    assert by_kind[QueryKind.GENERAL].mean_total == pytest.approx(3.1, abs=0.3)
    assert by_kind[QueryKind.OBJECT_QUERY].mean_total == pytest.approx(8.3, abs=0.3)
    for summary in by_kind.values():
        assert 0.4 <= summary.stddev_total <= 1.6

    # 30 room entries plus 30 unanchored object queries hit the recognizer.
    assert report.vision_calls == 60
    assert all(r.or_time is not None for r in report.records if r.kind is QueryKind.OBJECT_QUERY)
    # General queries never touch vision.
    assert all(r.or_time is None for r in report.records if r.kind is QueryKind.GENERAL)


def test_runs_are_reproducible_per_seed(scenario, latency_model):
    first = json.dumps(report_to_dict(run(scenario, latency_model, seed=7).report), sort_keys=True)
    second = json.dumps(report_to_dict(run(scenario, latency_model, seed=7).report), sort_keys=True)
    other = json.dumps(report_to_dict(run(scenario, latency_model, seed=8).report), sort_keys=True)
    assert first == second
    assert first != other


def test_anchored_variant_answers_object_queries_without_vision(scenario, latency_model):
    sim = run(anchored_variant(scenario), latency_model, seed=0)
    report = sim.report

    object_rows = [r for r in report.records if r.kind is QueryKind.OBJECT_QUERY]
    assert len(object_rows) == 30
    assert all(r.or_time is None for r in object_rows)
    # Only the 30 room entries call the recognizer now.
    assert report.vision_calls == 30
    # Chatbot plus processing is all that remains of the object query.
    mean_total = report.summary(QueryKind.OBJECT_QUERY).mean_total
    assert mean_total == pytest.approx(2.05 + 1.0, abs=0.3)


def test_session_latency_streams_are_independent(scenario, latency_model):
    full = run(scenario, latency_model, seed=0)
    solo_scenario = dataclasses.replace(
        scenario, scripts=(dataclasses.replace(scenario.scripts[0], copies=1),)
    )
    solo = run(solo_scenario, latency_model, seed=0)

    full_s001 = [r for r in full.report.records if r.session_id == "s001"]
    solo_s001 = [r for r in solo.report.records if r.session_id == "s001"]
    assert full_s001 == solo_s001


def test_zero_latency_model_degenerates_cleanly(scenario):
    model = LatencyModel(
        vision=TruncatedNormal(0.0, 0.0),
        chatbot=TruncatedNormal(0.0, 0.0),
        processing={kind: 0.0 for kind in QueryKind},
    )
    report = run(scenario, model, seed=0).report
    assert all(r.total_time == 0.0 for r in report.records)
    assert report.summary(QueryKind.OBJECT_QUERY).stddev_total == 0.0


def test_every_session_reaches_its_end(scenario, latency_model):
    sim = run(scenario, latency_model, seed=0)
    assert len(sim.sessions) == 30
    assert all(session.ended for session in sim.sessions)
    assert sorted(sim.traces) == [f"s{i:03d}" for i in range(1, 31)]


# --------------------------------------------------------------------------
# Report persistence and rendering.


def test_report_round_trips_through_disk(scenario, latency_model, tmp_path):
    report = run(scenario, latency_model, seed=3).report
    path = tmp_path / "report.json"
    save_report(report, path)
    assert load_report(path) == report


def test_tampered_report_aggregates_are_rejected(scenario, latency_model, tmp_path):
    report = run(scenario, latency_model, seed=3).report
    path = tmp_path / "report.json"
    save_report(report, path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["aggregates"]["General"]["mean_total"] += 0.5
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ValueError):
        load_report(path)


def test_render_report_shows_the_three_query_columns(scenario, latency_model):
    report = run(scenario, latency_model, seed=0).report
    text = render_report(report)
    assert text.startswith("scenario garden  seed 0\n")
    for fragment in (
        "Query A (anchor load)",
        "Query B (general)",
        "Query C (object)",
        "Total queries",
        "Object recognition (s)",
        "Total Time (s)",
        "Std Dev (s)",
    ):
        assert fragment in text
    # General queries show no recognition time.
    or_row = [line for line in text.splitlines() if line.startswith("Object recognition")][0]
    assert "-" in or_row

    anchored = run(anchored_variant(scenario), latency_model, seed=0).report
    assert "(anchored)" in render_report(anchored).splitlines()[0]
