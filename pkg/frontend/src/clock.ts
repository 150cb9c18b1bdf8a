// Session clock the operator drives. The engine has no clock of its own;
// time only moves when an event carries a larger t, so the console owns a
// controller that runs at 0x (paused), 1x, or 4x wall speed and posts
// ticks. It never runs behind the server clock: replies land in the
// engine's future, and the next user event must not rewind them.

import type { UserEventDict } from "./types.js";

export interface Clock {
  t: number;
  rate: number; // 0 pauses; 1 and 4 scale wall time
}

export const RATES = [0, 1, 4] as const;

export const STEP_SECONDS = 1.0;

export function initialClock(): Clock {
  return { t: 0, rate: 1 };
}

export function advance(clock: Clock, wallSeconds: number): Clock {
  return { ...clock, t: clock.t + wallSeconds * clock.rate };
}

export function stepClock(clock: Clock): Clock {
  return { ...clock, t: clock.t + STEP_SECONDS };
}

export function setRate(clock: Clock, rate: number): Clock {
  return { ...clock, rate };
}

export function syncForward(clock: Clock, serverClock: number): Clock {
  return clock.t >= serverClock ? clock : { ...clock, t: serverClock };
}

export function tickEvent(clock: Clock): UserEventDict {
  return { type: "tick", t: round3(clock.t) };
}

// Wall intervals are ragged; keep posted times tidy.
export function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}
