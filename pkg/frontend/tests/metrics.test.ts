import { describe, expect, it } from "vitest";

import { KIND_HEADERS, ROW_LABELS, cell, metricsTableRows, renderMetricsHtml } from "../src/metrics.js";
import { QUERY_KINDS, initialViewModel, reduceAll, summarize } from "../src/reducer.js";
import { anchored, unanchored } from "./helpers.js";

describe("metrics aggregation", () => {
  for (const [name, fixture] of [
    ["unanchored", unanchored],
    ["anchored", anchored],
  ] as const) {
    it(`matches the service's own aggregates (${name})`, () => {
      const vm = reduceAll(initialViewModel(), fixture.history.events);
      for (const kind of QUERY_KINDS) {
        const local = summarize(vm.metricsRows[kind]);
        const server = fixture.server_metrics.kinds[kind];
        expect(local.count).toBe(server.count);
        for (const key of ["mean_or", "mean_chatbot", "mean_processing", "mean_total"] as const) {
          if (server[key] === null) {
            expect(local[key]).toBeNull();
          } else {
            expect(local[key]).toBeCloseTo(server[key]!, 9);
          }
        }
        expect(local.stddev_total).toBeCloseTo(server.stddev_total, 9);
      }
    });
  }
});

describe("metrics table", () => {
  it("formats cells like the simulator report", () => {
    expect(cell(null)).toBe("-");
    expect(cell(3, true)).toBe("3");
    expect(cell(5.831480808827403)).toBe("5.83");
    expect(cell(0)).toBe("0.00");
  });

  it("lays out one column per query kind and one row per measure", () => {
    const vm = reduceAll(initialViewModel(), unanchored.history.events);
    const table = metricsTableRows(vm.metricsRows);
    expect(table[0]).toEqual([
      "Measure",
      "Query A (anchor load)",
      "Query B (general)",
      "Query C (object)",
    ]);
    expect(table.length).toBe(1 + ROW_LABELS.length);
    expect(table.map((r) => r[0])).toEqual([
      "Measure",
      "Total queries",
      "Object recognition (s)",
      "Chatbot (s)",
      "Processing time (s)",
      "Total Time (s)",
      "Std Dev (s)",
    ]);
  });

  it("shows a recognition time without anchors and a dash with them", () => {
    const plain = metricsTableRows(
      reduceAll(initialViewModel(), unanchored.history.events).metricsRows,
    );
    const fast = metricsTableRows(
      reduceAll(initialViewModel(), anchored.history.events).metricsRows,
    );
    const row = (table: string[][]) => table.find((r) => r[0] === "Object recognition (s)")!;
    const objectColumn = 1 + QUERY_KINDS.indexOf("ObjectQuery");
    expect(row(plain)[objectColumn]).toBe("5.83");
    expect(row(fast)[objectColumn]).toBe("-");
    expect(row(plain)[objectColumn]).not.toBe(row(fast)[objectColumn]);
    // Both sessions answered exactly one object query.
    const counts = (table: string[][]) => table.find((r) => r[0] === "Total queries")!;
    expect(counts(plain)[objectColumn]).toBe("1");
    expect(counts(fast)[objectColumn]).toBe("1");
  });

  it("renders the same HTML from a replayed stream", () => {
    const events = unanchored.history.events;
    const whole = reduceAll(initialViewModel(), events);
    const resumed = reduceAll(
      reduceAll(initialViewModel(), events.slice(0, 7)),
      events.slice(7),
    );
    const html = renderMetricsHtml(whole.metricsRows);
    expect(renderMetricsHtml(resumed.metricsRows)).toBe(html);
    expect(html).toContain("<table");
    expect(html).toContain(KIND_HEADERS.AnchorLoad);
  });
});
