// Top-down room map. Objects sit at their scene positions, the character
// marker sits at the visitor origin, and anchors from room_resolved draw
// as rings. Every clickable shape carries data attributes; translating a
// click into a gaze payload is pure so it can be tested without a DOM.

import { fitProjection, objectGazeTarget, toScreen } from "./geometry.js";
import type { AnchorDict, GazeTargetDict, RoomInfo } from "./types.js";

export const MAP_SIZE = 360;

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderRoomMapSvg(room: RoomInfo, anchors: AnchorDict[]): string {
  const proj = fitProjection(room.objects, MAP_SIZE);
  const parts: string[] = [];
  parts.push(`<svg class="room-map" viewBox="0 0 ${MAP_SIZE} ${MAP_SIZE}">`);
  parts.push(
    `<rect class="map-floor" data-gaze="floor" x="0" y="0" ` +
      `width="${MAP_SIZE}" height="${MAP_SIZE}"/>`,
  );
  for (const anchor of anchors) {
    if (anchor.room_id !== room.room_id) continue;
    const [ax, ay] = toScreen(proj, anchor.position);
    parts.push(
      `<circle class="anchor-ring" cx="${ax}" cy="${ay}" ` +
        `r="${Math.max(anchor.radius * proj.scale, 4)}" data-anchor="${anchor.id}"/>`,
    );
  }
  for (const object of room.objects) {
    const [ox, oy] = toScreen(proj, object.position);
    parts.push(
      `<g class="map-object" data-gaze="object" data-label="${escapeXml(object.label)}">` +
        `<circle cx="${ox}" cy="${oy}" r="9"/>` +
        `<text x="${ox}" y="${oy - 13}">${escapeXml(object.label)}</text></g>`,
    );
  }
  const [cx, cy] = toScreen(proj, [0, 0, 0]);
  parts.push(
    `<g class="map-character" data-gaze="character">` +
      `<circle cx="${cx}" cy="${cy}" r="12"/>` +
      `<text x="${cx}" y="${cy + 26}">${escapeXml(room.character)}</text></g>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

// Maps a clicked shape's data attributes to the gaze payload the service
// expects. Returns null when the shape is not a gaze surface.
export function gazeTargetForClick(
  room: RoomInfo,
  gaze: string | undefined,
  label: string | undefined,
): GazeTargetDict | null {
  if (gaze === "character") {
    return { kind: "character" };
  }
  if (gaze === "object" && label) {
    const object = room.objects.find((o) => o.label === label);
    if (!object) return null;
    return objectGazeTarget(room, object);
  }
  if (gaze === "floor") {
    return { kind: "none" };
  }
  return null;
}
