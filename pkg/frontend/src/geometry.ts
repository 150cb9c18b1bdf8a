// Click-to-gaze geometry. The operator stands where the simulator's
// visitor stands: at the origin of the room plane. Clicking an object
// builds the same ray the scripted sessions send, scene_ref included, so
// the recognition stub sees identical requests either way.

import type { GazeTargetDict, RoomInfo, SceneObjectInfo, UserEventDict } from "./types.js";

export const VISITOR_ORIGIN: [number, number, number] = [0, 0, 0];

export function unitTowards(position: number[]): [number, number, number] {
  const rel = [
    (position[0] ?? 0) - VISITOR_ORIGIN[0],
    (position[1] ?? 0) - VISITOR_ORIGIN[1],
    (position[2] ?? 0) - VISITOR_ORIGIN[2],
  ];
  // sqrt of the summed squares, not hypot: the scripted sessions normalize
  // this way, and the doubles must come out identical.
  const norm = Math.sqrt(rel[0]! * rel[0]! + rel[1]! * rel[1]! + rel[2]! * rel[2]!);
  if (norm === 0) {
    throw new Error("object sits exactly at the visitor origin");
  }
  return [rel[0]! / norm, rel[1]! / norm, rel[2]! / norm];
}

export function objectGazeTarget(room: RoomInfo, object: SceneObjectInfo): GazeTargetDict {
  return {
    kind: "world_ray",
    origin: [...VISITOR_ORIGIN],
    direction: [...unitTowards(object.position)],
    scene_ref: `${room.room_id}/${object.label}_view`,
  };
}

export function gazeEvent(target: GazeTargetDict, t: number): UserEventDict {
  return { type: "gaze_on", t, target };
}

// Top-down map projection: world x goes right, world z goes down. The
// scale fits every object inside the viewport with a margin.

export interface MapProjection {
  size: number; // square viewport, px
  scale: number; // px per meter
}

export function fitProjection(objects: SceneObjectInfo[], size: number): MapProjection {
  let extent = 1;
  for (const o of objects) {
    extent = Math.max(extent, Math.abs(o.position[0] ?? 0), Math.abs(o.position[2] ?? 0));
  }
  return { size, scale: (size / 2 - 24) / extent };
}

export function toScreen(p: MapProjection, position: number[]): [number, number] {
  return [p.size / 2 + (position[0] ?? 0) * p.scale, p.size / 2 + (position[2] ?? 0) * p.scale];
}
