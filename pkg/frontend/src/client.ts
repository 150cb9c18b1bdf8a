// Thin fetch client for the session service. Only the documented /v1
// surface is used; the console never reaches into engine internals.

import { framesToEvents, parseChunk, resumeFrom } from "./sse.js";
import type { OutputEvent, ScenarioInfo, UserEventDict } from "./types.js";

export interface CreateSessionRequest {
  binding: string; // "<scenario>/<room>"
  anchored: boolean;
  seed: number;
  init_room?: boolean;
}

export interface CreateSessionResponse {
  session_id: string;
  scenario: string;
  room_id: string;
  anchored: boolean;
}

export interface PostEventResponse {
  accepted: boolean;
  seq_start: number;
  seq_end: number;
  state: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export async function getScenarios(base: string): Promise<ScenarioInfo[]> {
  const doc = await asJson<{ scenarios: ScenarioInfo[] }>(await fetch(`${base}/v1/scenarios`));
  return doc.scenarios;
}

export async function createSession(
  base: string,
  request: CreateSessionRequest,
): Promise<CreateSessionResponse> {
  return asJson(
    await fetch(`${base}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    }),
  );
}

export async function postEvent(
  base: string,
  sessionId: string,
  event: UserEventDict,
): Promise<PostEventResponse> {
  return asJson(
    await fetch(`${base}/v1/sessions/${sessionId}/events`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ event }),
    }),
  );
}

// Reads one stream connection until the server's end frame or a transport
// drop. Events surface through the callback as they decode; the return
// value says which way the connection finished.
export async function readStream(
  base: string,
  sessionId: string,
  fromSeq: number,
  onEvent: (event: OutputEvent) => void,
  signal?: AbortSignal,
): Promise<"ended" | "closed"> {
  const response = await fetch(`${base}/v1/sessions/${sessionId}/stream${resumeFrom(fromSeq)}`, {
    signal,
  });
  if (!response.ok || !response.body) {
    throw new ApiError(response.status, response.statusText);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { value, done } = await reader.read();
    if (done) {
      return "closed";
    }
    buffer += decoder.decode(value, { stream: true });
    const { frames, rest } = parseChunk(buffer);
    buffer = rest;
    const update = framesToEvents(frames);
    for (const event of update.events) {
      onEvent(event);
    }
    if (update.done) {
      await reader.cancel();
      return "ended";
    }
  }
}
