// Wire contract mirror. Field names follow the service's documented
// encodings exactly; this file defines no behavior.

export type GazeTargetDict =
  | { kind: "character" }
  | { kind: "world_ray"; origin: number[]; direction: number[]; scene_ref?: string }
  | { kind: "none" };

export type UserEventDict =
  | { type: "gaze_on"; t: number; target: GazeTargetDict }
  | { type: "gaze_off"; t: number }
  | { type: "speech_started"; t: number }
  | { type: "speech_final"; t: number; text: string }
  | { type: "tick"; t: number }
  | { type: "voice_command"; t: number; text: string };

export interface SpeechSegment {
  word: string;
  start: number;
  end: number;
}

export interface BodySegment {
  clip: string;
  start: number;
  end: number;
}

export interface FaceSegment {
  class: string;
  level: string;
  start: number;
  end: number;
}

export interface VisemeSegment {
  shape: string;
  start: number;
  end: number;
}

export interface TimelineDict {
  total_duration: number;
  speech: SpeechSegment[];
  body: BodySegment[];
  face: FaceSegment[];
  visemes: VisemeSegment[];
}

export interface StateDict {
  state: string;
  [key: string]: unknown;
}

export type QueryKind = "AnchorLoad" | "General" | "ObjectQuery";

export interface MetricsDict {
  kind: QueryKind;
  or_time: number | null;
  chatbot_time: number | null;
  processing_time: number;
  total_time: number;
}

export interface AnchorDict {
  id: string;
  room_id: string;
  label: string;
  position: number[];
  radius: number;
}

export type OutputEvent =
  | { seq: number; type: "state_changed"; t: number; state: StateDict }
  | {
      seq: number;
      type: "agent_performance";
      t: number;
      text: string;
      is_filler: boolean;
      timeline: TimelineDict;
    }
  | { seq: number; type: "metrics_updated"; t: number; metrics: MetricsDict }
  | { seq: number; type: "room_resolved"; t: number; room_id: string; anchors: AnchorDict[] }
  | { seq: number; type: "session_ended"; t: number };

export interface SceneObjectInfo {
  label: string;
  position: number[];
}

export interface RoomInfo {
  room_id: string;
  character: string;
  objects: SceneObjectInfo[];
}

export interface ScenarioInfo {
  name: string;
  rooms: RoomInfo[];
}
