// Browser wiring. All agent logic lives server-side; everything here is
// read-model plumbing: post user events, fold the output stream through
// the reducer, and repaint panels from the view model.

import { advance, initialClock, round3, setRate, stepClock, syncForward, tickEvent } from "./clock.js";
import type { Clock } from "./clock.js";
import { createSession, getScenarios, postEvent, readStream, ApiError } from "./client.js";
import { gazeTargetForClick, renderRoomMapSvg } from "./map.js";
import { renderMetricsHtml } from "./metrics.js";
import { initialViewModel, reduce } from "./reducer.js";
import type { ViewModel } from "./reducer.js";
import { renderTimelineSvg } from "./timeline.js";
import type { RoomInfo, ScenarioInfo, UserEventDict } from "./types.js";

const BASE = ""; // served by `guidebot serve --static`, same origin

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

interface App {
  scenarios: ScenarioInfo[];
  sessionId: string | null;
  room: RoomInfo | null;
  vm: ViewModel;
  clock: Clock;
  connection: string;
  generation: number; // bumps on every new session/replay to retire old loops
}

const app: App = {
  scenarios: [],
  sessionId: null,
  room: null,
  vm: initialViewModel(),
  clock: initialClock(),
  connection: "idle",
  generation: 0,
};

// ----------------------------------------------------------------------
// Rendering.

function stateSummary(state: Record<string, unknown>): string {
  const extras = Object.entries(state)
    .filter(([key]) => key !== "state")
    .map(([key, value]) => `${key}=${JSON.stringify(value)}`)
    .join("  ");
  return extras ? `${state.state}  (${extras})` : String(state.state);
}

function render(): void {
  el("connection").textContent = app.connection;
  el("clock-value").textContent = app.clock.t.toFixed(1);
  el("session-meta").textContent = app.sessionId
    ? `${app.sessionId}  clock ${app.vm.clock.toFixed(2)}s  room ${app.vm.roomId ?? "-"}` +
      `  anchors ${app.vm.anchors.length}${app.vm.ended ? "  [ended]" : ""}`
    : "no session";
  el("state-name").textContent = stateSummary(app.vm.state);
  if (app.room) {
    el("room-map").innerHTML = renderRoomMapSvg(app.room, app.vm.anchors);
  }
  const perf = app.vm.lastPerformance;
  if (perf) {
    el("performance-caption").textContent =
      `${perf.is_filler ? "[filler] " : ""}"${perf.text}"  at t=${perf.t.toFixed(2)}s`;
    el("timeline").innerHTML = renderTimelineSvg(perf.timeline, 560);
  } else {
    el("performance-caption").textContent = "no performance yet";
    el("timeline").innerHTML = "";
  }
  el("reply-text").textContent = app.vm.lastReply ? app.vm.lastReply.text : "-";
  el("metrics").innerHTML = renderMetricsHtml(app.vm.metricsRows);
  el("log").textContent = app.vm.log
    .map((event) => `#${event.seq}  t=${event.t.toFixed(2)}  ${event.type}`)
    .join("\n");
}

function setConnection(value: string): void {
  app.connection = value;
  render();
}

// ----------------------------------------------------------------------
// Event posting and the stream loop.

async function sendEvent(event: UserEventDict): Promise<void> {
  if (!app.sessionId || app.vm.ended) return;
  try {
    await postEvent(BASE, app.sessionId, event);
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      return; // session ended while the event was in flight
    }
    setConnection(`error: ${String(error)}`);
  }
}

async function streamLoop(sessionId: string, generation: number): Promise<void> {
  while (generation === app.generation && !app.vm.ended) {
    setConnection("streaming");
    try {
      const outcome = await readStream(BASE, sessionId, app.vm.nextSeq, (event) => {
        if (generation !== app.generation) return;
        app.vm = reduce(app.vm, event);
        app.clock = syncForward(app.clock, app.vm.clock);
        render();
      });
      if (generation !== app.generation) return;
      if (outcome === "ended") {
        setConnection("ended");
        return;
      }
    } catch {
      if (generation !== app.generation) return;
      setConnection("reconnecting");
      await new Promise((resolve) => setTimeout(resolve, 1000));
    }
  }
}

function currentT(): number {
  app.clock = syncForward(app.clock, app.vm.clock);
  return round3(app.clock.t);
}

// ----------------------------------------------------------------------
// Controls.

function bindingOptions(scenarios: ScenarioInfo[]): string[] {
  const out: string[] = [];
  for (const scenario of scenarios) {
    for (const room of scenario.rooms) {
      out.push(`${scenario.name}/${room.room_id}`);
    }
  }
  return out;
}

function roomForBinding(binding: string): RoomInfo | null {
  const [name, roomId] = binding.split("/", 2);
  const scenario = app.scenarios.find((s) => s.name === name);
  return scenario?.rooms.find((r) => r.room_id === roomId) ?? null;
}

async function startSession(): Promise<void> {
  const binding = el<HTMLSelectElement>("binding").value;
  const anchored = el<HTMLInputElement>("anchored").checked;
  const seed = Number(el<HTMLInputElement>("seed").value) || 0;
  app.generation += 1;
  app.vm = initialViewModel();
  app.clock = initialClock();
  app.room = roomForBinding(binding);
  setConnection("creating session");
  try {
    const created = await createSession(BASE, { binding, anchored, seed });
    app.sessionId = created.session_id;
  } catch (error) {
    setConnection(`error: ${String(error)}`);
    return;
  }
  render();
  void streamLoop(app.sessionId, app.generation);
}

// Replays the whole stream into a fresh view model; panels must come back
// exactly as they were, which is the reconnect guarantee made visible.
function replayStream(): void {
  if (!app.sessionId) return;
  app.generation += 1;
  app.vm = initialViewModel();
  render();
  void streamLoop(app.sessionId, app.generation);
}

function wireControls(): void {
  el("create").addEventListener("click", () => void startSession());
  el("replay").addEventListener("click", () => replayStream());

  el("room-map").addEventListener("click", (raw) => {
    if (!app.room) return;
    const shape = (raw.target as Element).closest("[data-gaze]");
    if (!shape) return;
    const target = gazeTargetForClick(
      app.room,
      (shape as HTMLElement).dataset.gaze,
      (shape as HTMLElement).dataset.label,
    );
    if (target) {
      void sendEvent({ type: "gaze_on", t: currentT(), target });
    }
  });
  el("gaze-off").addEventListener("click", () => {
    void sendEvent({ type: "gaze_off", t: currentT() });
  });

  el("say").addEventListener("click", () => {
    const input = el<HTMLInputElement>("utterance");
    const text = input.value.trim();
    if (!text) return;
    void sendEvent({ type: "speech_final", t: currentT(), text });
    input.value = "";
  });
  el("command").addEventListener("click", () => {
    const input = el<HTMLInputElement>("utterance");
    const text = input.value.trim();
    if (!text) return;
    void sendEvent({ type: "voice_command", t: currentT(), text });
    input.value = "";
  });

  for (const rate of [0, 1, 4]) {
    el(`rate-${rate}`).addEventListener("click", () => {
      app.clock = setRate(app.clock, rate);
      render();
    });
  }
  el("step").addEventListener("click", () => {
    app.clock = stepClock(syncForward(app.clock, app.vm.clock));
    render();
    void sendEvent(tickEvent(app.clock));
  });

  window.setInterval(() => {
    if (app.clock.rate === 0) return;
    app.clock = advance(syncForward(app.clock, app.vm.clock), 1.0);
    render();
    if (app.sessionId && !app.vm.ended) {
      void sendEvent(tickEvent(app.clock));
    }
  }, 1000);
}

async function main(): Promise<void> {
  wireControls();
  render();
  try {
    app.scenarios = await getScenarios(BASE);
  } catch (error) {
    setConnection(`error: ${String(error)}`);
    return;
  }
  const select = el<HTMLSelectElement>("binding");
  for (const binding of bindingOptions(app.scenarios)) {
    const option = document.createElement("option");
    option.value = binding;
    option.textContent = binding;
    select.appendChild(option);
  }
  setConnection("ready");
}

void main();
