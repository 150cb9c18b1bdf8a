import { describe, expect, it } from "vitest";

import { LOG_TAIL, initialViewModel, reduce, reduceAll, summarize } from "../src/reducer.js";
import type { OutputEvent } from "../src/types.js";
import { anchored, unanchored } from "./helpers.js";
import type { SessionFixture } from "./helpers.js";

function stateChange(seq: number, t: number, name: string): OutputEvent {
  return { seq, type: "state_changed", t, state: { state: name } };
}

describe("view model reducer", () => {
  it("starts Idle with an empty resume cursor", () => {
    const vm = initialViewModel();
    expect(vm.state.state).toBe("Idle");
    expect(vm.nextSeq).toBe(0);
    expect(vm.ended).toBe(false);
  });

  it("tracks clock, cursor, and log tail", () => {
    let vm = initialViewModel();
    for (let i = 0; i < LOG_TAIL + 50; i++) {
      vm = reduce(vm, stateChange(i, i * 0.5, "Listening"));
    }
    expect(vm.log.length).toBe(LOG_TAIL);
    expect(vm.log[0]!.seq).toBe(50);
    expect(vm.nextSeq).toBe(LOG_TAIL + 50);
    expect(vm.clock).toBeCloseTo((LOG_TAIL + 49) * 0.5, 12);
  });

  it("does not let an out-of-order t move the clock backwards", () => {
    let vm = reduce(initialViewModel(), stateChange(0, 10, "Listening"));
    vm = reduce(vm, stateChange(1, 4, "Listening"));
    expect(vm.clock).toBe(10);
  });

  for (const [name, fixture] of [
    ["unanchored", unanchored],
    ["anchored", anchored],
  ] as [string, SessionFixture][]) {
    it(`replays the ${name} recording to its final panel state`, () => {
      const vm = reduceAll(initialViewModel(), fixture.history.events);
      expect(vm.ended).toBe(true);
      expect(vm.state.state).toBe("Ended");
      expect(vm.roomId).toBe("room1");
      expect(vm.nextSeq).toBe(fixture.history.next_seq);
      expect(vm.lastReply).not.toBeNull();
      expect(vm.lastReply!.is_filler).toBe(false);
    });

    it(`agrees with the server's state after every posted event (${name})`, () => {
      // The service reports its authoritative FSM state in each post
      // response; folding the outputs up to that point must land on the
      // same name.
      for (const post of fixture.posted) {
        if (post.response.seq_end === 0) continue;
        const prefix = fixture.history.events.filter((e) => e.seq < post.response.seq_end);
        const vm = reduceAll(initialViewModel(), prefix);
        expect(vm.state.state).toBe(post.response.state);
      }
    });

    it(`rebuilds identically when the stream is resumed mid-way (${name})`, () => {
      const events = fixture.history.events;
      const whole = reduceAll(initialViewModel(), events);
      for (const cut of [1, 4, 9, events.length - 1]) {
        const resumed = reduceAll(
          reduceAll(initialViewModel(), events.slice(0, cut)),
          events.slice(cut),
        );
        expect(resumed).toEqual(whole);
      }
    });
  }

  it("renders Listening after looking at the character and four seconds of clock", () => {
    const tickPost = unanchored.posted[1]!;
    expect(tickPost.event).toEqual({ type: "tick", t: 4.0 });
    const prefix = unanchored.history.events.filter((e) => e.seq < tickPost.response.seq_end);
    expect(reduceAll(initialViewModel(), prefix).state.state).toBe("Listening");
  });

  it("keeps anchors from room_resolved", () => {
    const vm = reduceAll(initialViewModel(), anchored.history.events);
    expect(vm.anchors.length).toBe(5);
    expect(vm.anchors.map((a) => a.room_id)).toContain("room1");
    const bare = reduceAll(initialViewModel(), unanchored.history.events);
    expect(bare.anchors.length).toBe(0);
  });

  it("separates fillers from replies", () => {
    const vm = reduceAll(initialViewModel(), unanchored.history.events);
    const fillers = unanchored.history.events.filter(
      (e) => e.type === "agent_performance" && e.is_filler,
    );
    expect(fillers.length).toBe(1);
    expect(vm.lastReply!.text).toMatch(/rose/);
    expect(vm.lastReply!.is_filler).toBe(false);
  });
});

describe("summarize", () => {
  it("returns the empty summary for no rows", () => {
    expect(summarize([])).toEqual({
      count: 0,
      mean_or: null,
      mean_chatbot: null,
      mean_processing: null,
      mean_total: null,
      stddev_total: 0,
    });
  });

  it("skips missing components and uses the sample deviation", () => {
    const rows = [
      { kind: "General" as const, or_time: null, chatbot_time: 2.0, processing_time: 1.0, total_time: 3.0 },
      { kind: "General" as const, or_time: 4.0, chatbot_time: null, processing_time: 1.0, total_time: 5.0 },
    ];
    const s = summarize(rows);
    expect(s.count).toBe(2);
    expect(s.mean_or).toBe(4.0);
    expect(s.mean_chatbot).toBe(2.0);
    expect(s.mean_processing).toBe(1.0);
    expect(s.mean_total).toBe(4.0);
    expect(s.stddev_total).toBeCloseTo(Math.SQRT2, 12);
  });

  it("uses zero deviation under two rows", () => {
    const one = [
      { kind: "General" as const, or_time: null, chatbot_time: 2.0, processing_time: 1.0, total_time: 3.0 },
    ];
    expect(summarize(one).stddev_total).toBe(0);
  });
});
