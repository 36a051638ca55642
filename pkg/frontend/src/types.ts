// Payload shapes mirrored from the analysis server. The client treats the
// server as the single source of truth: nothing here is computed locally.

export interface AgentInfo {
  agent: string;
  name: string;
  characteristics: string;
}

export interface Band {
  location: string;
  name: string;
  y0: number;
  y1: number;
}

export interface Curve {
  agent: string;
  points: [number, number][];
}

export interface InteractionArea {
  agents: string[];
  timeRange: [number, number];
  location: string;
  kind: "conversation" | "colocation";
}

export interface SegmentMarker {
  agent: string;
  start: number;
  end: number;
  emoji: string;
  description: string;
}

export interface MemoryHighlight {
  agent: string;
  t: number;
  opIndex: number;
  score: number;
}

export interface OutlinePayload {
  range: [number, number];
  n: number;
  bands: Band[];
  curves: Curve[];
  interactionAreas: InteractionArea[];
  segmentMarkers: SegmentMarker[];
  memoryHighlights: MemoryHighlight[];
}

export type TaskKind = "perceive" | "think" | "act";
export type OpKind = "environment" | "memory" | "decision";

export interface TimelineOperation {
  opIndex: number;
  opKind: OpKind;
  text: string;
  hasPrompt: boolean;
  causeCount: number;
}

export interface TimelineTask {
  taskId: string;
  taskKind: TaskKind;
  operations: TimelineOperation[];
}

export interface TimelinePoint {
  t: number;
  tasks: TimelineTask[];
}

export interface TimelinePayload {
  agent: string;
  range: [number, number];
  points: TimelinePoint[];
}

export interface OpRef {
  t: number;
  agent: string;
  opIndex: number;
}

export interface OperationDetail extends OpRef {
  taskId: string;
  taskKind: TaskKind;
  opKind: OpKind;
  text: string;
  prompt: string | null;
  response: string | null;
  explicitCauses: OpRef[];
}

export interface CauseEdge {
  src: OpRef;
  dst: OpRef;
  kind: "explicit" | "implicit";
  similarity: number;
}

export interface CausesPayload {
  explicit: CauseEdge[];
  implicit: CauseEdge[];
}

export interface SearchHit {
  agent: string;
  t: number;
  opIndex: number;
  score: number;
  mode: "lexical" | "semantic";
}

export interface MonitorAgent {
  agent: string;
  location: string;
  position: [number, number] | null;
}

export interface MapLocation {
  location: string;
  name: string;
  bounds: [number, number, number, number];
}

export interface MonitorFrame {
  t: number;
  agents: MonitorAgent[];
  mapMeta: { locations: MapLocation[] };
  focus: { agent: string; location: string; bounds: [number, number, number, number] } | null;
}

export function sameRef(a: OpRef, b: OpRef): boolean {
  return a.t === b.t && a.agent === b.agent && a.opIndex === b.opIndex;
}

export function refKey(ref: OpRef): string {
  return `${ref.t}/${ref.agent}/${ref.opIndex}`;
}
