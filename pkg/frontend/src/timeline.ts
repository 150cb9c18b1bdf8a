// Four-track performance timeline. Layout is pure arithmetic so tests can
// assert that every rendered segment carries exactly the start/end values
// the service serialized; the SVG string is built from that layout.

import type { TimelineDict } from "./types.js";

export interface LaidSegment {
  track: "speech" | "body" | "face" | "visemes";
  label: string;
  start: number;
  end: number;
  x: number;
  width: number;
}

export const TRACK_ORDER: LaidSegment["track"][] = ["speech", "body", "face", "visemes"];

export function layoutTimeline(timeline: TimelineDict, width: number): LaidSegment[] {
  const total = timeline.total_duration;
  const scale = total > 0 ? width / total : 0;
  const out: LaidSegment[] = [];
  const push = (track: LaidSegment["track"], label: string, start: number, end: number) => {
    out.push({ track, label, start, end, x: start * scale, width: (end - start) * scale });
  };
  for (const s of timeline.speech) push("speech", s.word, s.start, s.end);
  for (const b of timeline.body) push("body", b.clip, b.start, b.end);
  for (const f of timeline.face) push("face", `${f.class} (${f.level})`, f.start, f.end);
  for (const v of timeline.visemes) push("visemes", v.shape, v.start, v.end);
  return out;
}

const ROW_HEIGHT = 26;
const LABEL_GUTTER = 64;

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTimelineSvg(timeline: TimelineDict, width: number): string {
  const segments = layoutTimeline(timeline, width);
  const height = TRACK_ORDER.length * ROW_HEIGHT;
  const parts: string[] = [];
  parts.push(
    `<svg class="timeline" viewBox="0 0 ${width + LABEL_GUTTER} ${height}" ` +
      `data-total-duration="${timeline.total_duration}">`,
  );
  TRACK_ORDER.forEach((track, row) => {
    const y = row * ROW_HEIGHT;
    parts.push(
      `<text class="track-name" x="0" y="${y + 17}">${track}</text>`,
      `<line x1="${LABEL_GUTTER}" y1="${y + ROW_HEIGHT - 1}" ` +
        `x2="${LABEL_GUTTER + width}" y2="${y + ROW_HEIGHT - 1}" class="track-rule"/>`,
    );
    for (const seg of segments) {
      if (seg.track !== track) continue;
      parts.push(
        `<rect class="seg seg-${track}" x="${LABEL_GUTTER + seg.x}" y="${y + 3}" ` +
          `width="${Math.max(seg.width, 0.5)}" height="${ROW_HEIGHT - 8}" ` +
          `data-track="${track}" data-start="${seg.start}" data-end="${seg.end}">` +
          `<title>${escapeXml(seg.label)} [${seg.start}, ${seg.end}]</title></rect>`,
      );
      if (seg.width > 18) {
        parts.push(
          `<text class="seg-label" x="${LABEL_GUTTER + seg.x + 3}" y="${y + 16}">` +
            `${escapeXml(seg.label)}</text>`,
        );
      }
    }
  });
  parts.push("</svg>");
  return parts.join("");
}
