// Incremental parser for the service's event stream framing plus the
// resume cursor. The network layer hands in whatever chunk boundaries the
// transport produced; frames only count once the blank-line terminator has
// arrived.

import type { OutputEvent } from "./types.js";

export interface SseFrame {
  id: number | null;
  event: string | null; // the service only labels its final frame ("end")
  data: string;
}

export interface ParseResult {
  frames: SseFrame[];
  rest: string; // unterminated tail, prepend to the next chunk
}

export function parseChunk(buffer: string): ParseResult {
  const frames: SseFrame[] = [];
  let start = 0;
  for (;;) {
    const cut = buffer.indexOf("\n\n", start);
    if (cut < 0) {
      break;
    }
    const frame: SseFrame = { id: null, event: null, data: "" };
    for (const line of buffer.slice(start, cut).split("\n")) {
      if (line.startsWith("id: ")) {
        frame.id = Number(line.slice(4));
      } else if (line.startsWith("event: ")) {
        frame.event = line.slice(7);
      } else if (line.startsWith("data: ")) {
        frame.data += line.slice(6);
      }
    }
    frames.push(frame);
    start = cut + 2;
  }
  return { frames, rest: buffer.slice(start) };
}

export interface StreamUpdate {
  events: OutputEvent[];
  done: boolean; // the server sent its terminating frame
}

export function framesToEvents(frames: SseFrame[]): StreamUpdate {
  const events: OutputEvent[] = [];
  let done = false;
  for (const frame of frames) {
    if (frame.event === "end") {
      done = true;
      continue;
    }
    if (frame.data) {
      events.push(JSON.parse(frame.data) as OutputEvent);
    }
  }
  return { events, done };
}

// A reconnect asks for everything it has not applied yet; the view model's
// nextSeq is exactly that, so resume never drops or repeats an event.
export function resumeFrom(nextSeq: number): string {
  return `?from_seq=${nextSeq}`;
}
