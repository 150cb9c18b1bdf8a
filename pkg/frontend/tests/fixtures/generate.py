"""Regenerates the recorded service fixtures used by the console tests.

Runs the real session service in-process, drives one unanchored and one
anchored session through the same script, and saves everything the console
would see over the wire: the created-session response, the user events as
posted, the full numbered output history, and the server-side aggregate
metrics. Console tests replay these verbatim, so they exercise the exact
payload shapes the service emits.

Usage: python generate.py  (writes JSON into this directory)
"""

import json
import math
import pathlib

from fastapi.testclient import TestClient

from guidebot.service import create_app

HERE = pathlib.Path(__file__).resolve().parent

BINDING = "garden/room1"
ROOM = "room1"
SEED = 0


def unit_towards(position):
    rel = (position[0], position[1], position[2])
    norm = math.sqrt(sum(c * c for c in rel))
    return [c / norm for c in rel]


def script(rose_position):
    return [
        {"type": "gaze_on", "t": 0.0, "target": {"kind": "character"}},
        {"type": "tick", "t": 4.0},
        {"type": "speech_final", "t": 6.0, "text": "who are you"},
        {
            "type": "gaze_on",
            "t": 40.0,
            "target": {
                "kind": "world_ray",
                "origin": [0.0, 0.0, 0.0],
                "direction": unit_towards(rose_position),
                "scene_ref": f"{ROOM}/rose_view",
            },
        },
        {"type": "voice_command", "t": 41.0, "text": "what is this"},
        {"type": "gaze_off", "t": 70.0},
        {"type": "tick", "t": 80.0},
    ]


def drive(client, anchored, rose_position):
    created = client.post(
        "/v1/sessions",
        json={"binding": BINDING, "anchored": anchored, "seed": SEED, "init_room": True},
    ).json()
    sid = created["session_id"]
    posted = []
    for event in script(rose_position):
        response = client.post(f"/v1/sessions/{sid}/events", json={"event": event})
        assert response.status_code == 200, response.text
        posted.append({"event": event, "response": response.json()})
    history = client.get(f"/v1/sessions/{sid}/history", params={"from_seq": 0}).json()
    info = client.get(f"/v1/sessions/{sid}").json()
    assert info["ended"], "fixture session must run to completion"
    metrics = client.get(f"/v1/sessions/{sid}/metrics").json()
    return {
        "created": created,
        "posted": posted,
        "history": history,
        "server_metrics": metrics,
    }


def main():
    client = TestClient(create_app())
    scenarios = client.get("/v1/scenarios").json()
    (HERE / "scenarios.json").write_text(json.dumps(scenarios, indent=2))
    garden = next(s for s in scenarios["scenarios"] if s["name"] == "garden")
    room = next(r for r in garden["rooms"] if r["room_id"] == ROOM)
    rose = next(o for o in room["objects"] if o["label"] == "rose")
    for anchored, name in ((False, "session_unanchored.json"), (True, "session_anchored.json")):
        doc = drive(client, anchored, rose["position"])
        (HERE / name).write_text(json.dumps(doc, indent=2))
        print(f"{name}: {len(doc['history']['events'])} output events")


if __name__ == "__main__":
    main()
