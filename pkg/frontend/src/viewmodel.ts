/**
 * Pure projection of the envelope stream into what the console shows.
 *
 * No client-side simulation or prediction: every pose and every transcript
 * line comes straight from a received envelope, which is what makes the
 * view testable headlessly by replaying a recorded session log.
 */

import {
  Envelope,
  ExecPayload,
  ObjectsPayload,
  ReplyPayload,
  SceneObjectPayload,
  StatePayload,
  TOPICS,
  UtterancePayload,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface TranscriptEntry {
  role: "operator" | "assistant";
  text: string;
  /** Assistant turn that asks the operator something and awaits an answer. */
  clarification: boolean;
  /** Canonical command texts, for command-bearing assistant turns. */
  commands?: string[];
}

export interface WorkspaceView {
  objects: SceneObjectPayload[];
  gripper: [number, number, number] | null;
  aperture: number | null;
  /** Continuously moving interim target. */
  interim: [number, number, number] | null;
  /** Discrete commanded target. */
  target: [number, number, number] | null;
}

export interface ExecView {
  state: "idle" | "running" | "done" | "failed";
  primitive: string | null;
  command: string | null;
  error: string | null;
}

export interface ViewState {
  connection: ConnectionState;
  sessionId: string | null;
  transcript: TranscriptEntry[];
  /** True while the last assistant turn is a clarification awaiting input. */
  pendingClarification: boolean;
  /** Mirrors the dialogue turn-taking: locked from send until the reply,
   * and through execution until a terminal exec status. */
  inputLocked: boolean;
  workspace: WorkspaceView;
  exec: ExecView;
  lastTsMs: number;
}

export function initialView(): ViewState {
  return {
    connection: "connecting",
    sessionId: null,
    transcript: [],
    pendingClarification: false,
    inputLocked: false,
    workspace: {
      objects: [],
      gripper: null,
      aperture: null,
      interim: null,
      target: null,
    },
    exec: { state: "idle", primitive: null, command: null, error: null },
    lastTsMs: 0,
  };
}

function triple(values: number[]): [number, number, number] {
  return [values[0], values[1], values[2]];
}

/** Apply one envelope; returns the same (mutated) state for chaining. */
export function applyEnvelope(view: ViewState, envelope: Envelope): ViewState {
  view.lastTsMs = envelope.ts_ms;
  switch (envelope.topic) {
    case TOPICS.utterance: {
      const payload = envelope.payload as UtterancePayload;
      view.transcript.push({
        role: "operator",
        text: payload.text,
        clarification: false,
      });
      view.pendingClarification = false;
      view.inputLocked = true;
      break;
    }
    case TOPICS.reply: {
      const payload = envelope.payload as ReplyPayload;
      const clarification = payload.kind === "conversation";
      view.transcript.push({
        role: "assistant",
        text: payload.text,
        clarification,
        commands: payload.commands,
      });
      view.pendingClarification = clarification;
      // Command-bearing replies keep the input locked through execution.
      view.inputLocked = payload.kind === "commands";
      if (payload.kind === "commands") {
        view.exec = { state: "running", primitive: null, command: null, error: null };
      }
      break;
    }
    case TOPICS.state: {
      const payload = envelope.payload as StatePayload;
      view.workspace.gripper = triple(payload.x);
      view.workspace.aperture = payload.x[6];
      view.workspace.interim = triple(payload.interim);
      view.workspace.target = triple(payload.target);
      break;
    }
    case TOPICS.objects: {
      const payload = envelope.payload as ObjectsPayload;
      view.workspace.objects = payload.objects;
      break;
    }
    case TOPICS.command: {
      const payload = envelope.payload as { text?: string };
      view.exec.command = payload.text ?? null;
      break;
    }
    case TOPICS.exec: {
      const payload = envelope.payload as ExecPayload;
      view.exec = {
        state: payload.state,
        primitive: payload.primitive ?? null,
        command: payload.command ?? view.exec.command,
        error: payload.error ?? null,
      };
      if (payload.state === "done" || payload.state === "failed") {
        view.inputLocked = false;
      }
      break;
    }
    case TOPICS.event: {
      const payload = envelope.payload as { event?: string; session_id?: string };
      if (payload.event === "start" && payload.session_id) {
        view.sessionId = payload.session_id;
      }
      break;
    }
    default:
      // Unknown topics are ignored; the view renders only what it knows.
      break;
  }
  return view;
}

export function setConnection(view: ViewState, state: ConnectionState): ViewState {
  view.connection = state;
  if (state !== "connected") {
    view.inputLocked = true;
  } else if (view.exec.state !== "running") {
    view.inputLocked = false;
  }
  return view;
}

/** Whether the operator may type right now. */
export function canSend(view: ViewState): boolean {
  return view.connection === "connected" && !view.inputLocked;
}
