// Metrics table in the simulator report's shape: one column per query
// kind, one row per measure, "-" where a component never ran.

import { QUERY_KINDS, summarize } from "./reducer.js";
import type { KindSummary } from "./reducer.js";
import type { MetricsDict, QueryKind } from "./types.js";

export const KIND_HEADERS: Record<QueryKind, string> = {
  AnchorLoad: "Query A (anchor load)",
  General: "Query B (general)",
  ObjectQuery: "Query C (object)",
};

export const ROW_LABELS: [keyof KindSummary, string][] = [
  ["count", "Total queries"],
  ["mean_or", "Object recognition (s)"],
  ["mean_chatbot", "Chatbot (s)"],
  ["mean_processing", "Processing time (s)"],
  ["mean_total", "Total Time (s)"],
  ["stddev_total", "Std Dev (s)"],
];

export function cell(value: number | null, isCount = false): string {
  if (value === null) return "-";
  return isCount ? String(value) : value.toFixed(2);
}

// Rows of display strings, header row first.
export function metricsTableRows(metricsRows: Record<QueryKind, MetricsDict[]>): string[][] {
  const summaries = QUERY_KINDS.map((kind) => summarize(metricsRows[kind]));
  const table: string[][] = [["Measure", ...QUERY_KINDS.map((k) => KIND_HEADERS[k])]];
  for (const [attr, label] of ROW_LABELS) {
    table.push([label, ...summaries.map((s) => cell(s[attr], attr === "count"))]);
  }
  return table;
}

export function renderMetricsHtml(metricsRows: Record<QueryKind, MetricsDict[]>): string {
  const [header, ...rows] = metricsTableRows(metricsRows);
  const head = `<tr>${header!.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows
    .map((r) => `<tr>${r.map((c, i) => (i === 0 ? `<th>${c}</th>` : `<td>${c}</td>`)).join("")}</tr>`)
    .join("");
  return `<table class="metrics"><thead>${head}</thead><tbody>${body}</tbody></table>`;
}
