/**
 * Envelope protocol shared with the arm service.
 *
 * One JSON object per WebSocket text frame (or per line on the raw TCP
 * bridge): {topic, seq, ts_ms, payload}. Sequence numbers are per topic,
 * start at 1 and never gap; timestamps are milliseconds of simulated
 * session time.
 */

export interface Envelope {
  topic: string;
  seq: number;
  ts_ms: number;
  payload: unknown;
}

export const TOPICS = {
  utterance: "user/utterance",
  reply: "assistant/reply",
  command: "robot/command",
  state: "robot/state",
  objects: "scene/objects",
  exec: "exec/status",
  event: "session/event",
} as const;

export interface ReplyPayload {
  text: string;
  kind: "conversation" | "commands" | "error";
  relay?: string;
  commands?: string[];
  turn: number;
}

export interface UtterancePayload {
  text: string;
  turn: number;
}

export interface StatePayload {
  t: number;
  x: number[]; // [px, py, pz, rx, ry, rz, aperture]
  v: number[];
  target: number[];
  interim: number[];
}

export interface SceneObjectPayload {
  name: string;
  x: number;
  y: number;
  z: number;
  held: boolean;
}

export interface ObjectsPayload {
  objects: SceneObjectPayload[];
}

export interface ExecPayload {
  state: "running" | "done" | "failed";
  primitive?: string;
  command?: string;
  cursor?: number;
  total?: number;
  error?: string;
}

export function parseEnvelope(line: string): Envelope {
  const doc: unknown = JSON.parse(line);
  if (typeof doc !== "object" || doc === null) {
    throw new Error("envelope must be a JSON object");
  }
  const record = doc as Record<string, unknown>;
  const { topic, seq, ts_ms } = record;
  if (typeof topic !== "string" || topic.length === 0) {
    throw new Error("envelope missing topic");
  }
  if (typeof seq !== "number" || typeof ts_ms !== "number") {
    throw new Error("envelope missing seq/ts_ms");
  }
  if (!("payload" in record)) {
    throw new Error("envelope missing payload");
  }
  return { topic, seq, ts_ms, payload: record.payload };
}

export function encodeUtterance(text: string): string {
  return JSON.stringify({ topic: TOPICS.utterance, payload: { text } });
}
