// Pure view-model reducer. Everything a panel shows derives from the
// numbered output events alone, so replaying the stream from sequence 0
// after a reconnect rebuilds the exact same view.

import type {
  AnchorDict,
  MetricsDict,
  OutputEvent,
  QueryKind,
  StateDict,
  TimelineDict,
} from "./types.js";

export const QUERY_KINDS: QueryKind[] = ["AnchorLoad", "General", "ObjectQuery"];

export const LOG_TAIL = 200;

export interface Performance {
  t: number;
  text: string;
  is_filler: boolean;
  timeline: TimelineDict;
}

export interface ViewModel {
  state: StateDict;
  clock: number;
  roomId: string | null;
  anchors: AnchorDict[];
  lastPerformance: Performance | null;
  lastReply: Performance | null; // latest non-filler performance
  metricsRows: Record<QueryKind, MetricsDict[]>;
  log: OutputEvent[];
  nextSeq: number; // resume cursor: first sequence number not yet applied
  ended: boolean;
}

export function initialViewModel(): ViewModel {
  return {
    state: { state: "Idle" },
    clock: 0,
    roomId: null,
    anchors: [],
    lastPerformance: null,
    lastReply: null,
    metricsRows: { AnchorLoad: [], General: [], ObjectQuery: [] },
    log: [],
    nextSeq: 0,
    ended: false,
  };
}

export function reduce(vm: ViewModel, event: OutputEvent): ViewModel {
  const next: ViewModel = {
    ...vm,
    clock: Math.max(vm.clock, event.t),
    log: [...vm.log, event].slice(-LOG_TAIL),
    nextSeq: Math.max(vm.nextSeq, event.seq + 1),
  };
  switch (event.type) {
    case "state_changed":
      next.state = event.state;
      break;
    case "room_resolved":
      next.roomId = event.room_id;
      next.anchors = event.anchors;
      break;
    case "agent_performance": {
      const perf: Performance = {
        t: event.t,
        text: event.text,
        is_filler: event.is_filler,
        timeline: event.timeline,
      };
      next.lastPerformance = perf;
      if (!event.is_filler) {
        next.lastReply = perf;
      }
      break;
    }
    case "metrics_updated": {
      const kind = event.metrics.kind;
      next.metricsRows = {
        ...vm.metricsRows,
        [kind]: [...vm.metricsRows[kind], event.metrics],
      };
      break;
    }
    case "session_ended":
      next.ended = true;
      break;
  }
  return next;
}

export function reduceAll(vm: ViewModel, events: OutputEvent[]): ViewModel {
  return events.reduce(reduce, vm);
}

// Per-kind aggregates in the engine's terms: means skip components that
// never ran, stddev is the sample deviation of totals (0 under 2 rows).

export interface KindSummary {
  count: number;
  mean_or: number | null;
  mean_chatbot: number | null;
  mean_processing: number | null;
  mean_total: number | null;
  stddev_total: number;
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function summarize(rows: MetricsDict[]): KindSummary {
  if (rows.length === 0) {
    return {
      count: 0,
      mean_or: null,
      mean_chatbot: null,
      mean_processing: null,
      mean_total: null,
      stddev_total: 0,
    };
  }
  const ors = rows.map((r) => r.or_time).filter((v): v is number => v !== null);
  const chats = rows.map((r) => r.chatbot_time).filter((v): v is number => v !== null);
  const totals = rows.map((r) => r.total_time);
  const m = mean(totals);
  const stddev =
    totals.length > 1
      ? Math.sqrt(totals.reduce((a, v) => a + (v - m) * (v - m), 0) / (totals.length - 1))
      : 0;
  return {
    count: rows.length,
    mean_or: ors.length ? mean(ors) : null,
    mean_chatbot: chats.length ? mean(chats) : null,
    mean_processing: mean(rows.map((r) => r.processing_time)),
    mean_total: m,
    stddev_total: stddev,
  };
}
