// Fixture loading. The JSON files are verbatim recordings of the session
// service driving two real sessions (see fixtures/generate.py), so every
// payload the tests replay has the exact wire shape the console receives.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { KindSummary } from "../src/reducer.js";
import type { OutputEvent, QueryKind, RoomInfo, ScenarioInfo, UserEventDict } from "../src/types.js";

export interface PostRecord {
  event: UserEventDict;
  response: { accepted: boolean; seq_start: number; seq_end: number; state: string };
}

export interface SessionFixture {
  created: { session_id: string; scenario: string; room_id: string; anchored: boolean };
  posted: PostRecord[];
  history: { events: OutputEvent[]; next_seq: number };
  server_metrics: { kinds: Record<QueryKind, KindSummary> };
}

const here = dirname(fileURLToPath(import.meta.url));

function load<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf8")) as T;
}

export const unanchored = load<SessionFixture>("session_unanchored.json");
export const anchored = load<SessionFixture>("session_anchored.json");

const scenarios = load<{ scenarios: ScenarioInfo[] }>("scenarios.json").scenarios;

export function fixtureRoom(): RoomInfo {
  const garden = scenarios.find((s) => s.name === "garden");
  const room = garden?.rooms.find((r) => r.room_id === "room1");
  if (!room) throw new Error("fixture scenario is missing garden/room1");
  return room;
}

// The stream framing the service writes, reproduced byte for byte.
export function frameStream(events: OutputEvent[], withEnd = true): string {
  const frames = events.map((e) => `id: ${e.seq}\ndata: ${JSON.stringify(e)}\n\n`);
  return frames.join("") + (withEnd ? "event: end\ndata: {}\n\n" : "");
}
