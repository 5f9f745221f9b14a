/**
 * Pure projection of the envelope stream into what the console shows.
 *
 * No client-side simulation or prediction: every pose and every transcript
 * line comes straight from a received envelope, which is what makes the
 * view testable headlessly by replaying a recorded session log.
 */
import { TOPICS, } from "./protocol.js";
export function initialView() {
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
function triple(values) {
    return [values[0], values[1], values[2]];
}
/** Apply one envelope; returns the same (mutated) state for chaining. */
export function applyEnvelope(view, envelope) {
    view.lastTsMs = envelope.ts_ms;
    switch (envelope.topic) {
        case TOPICS.utterance: {
            const payload = envelope.payload;
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
            const payload = envelope.payload;
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
            const payload = envelope.payload;
            view.workspace.gripper = triple(payload.x);
            view.workspace.aperture = payload.x[6];
            view.workspace.interim = triple(payload.interim);
            view.workspace.target = triple(payload.target);
            break;
        }
        case TOPICS.objects: {
            const payload = envelope.payload;
            view.workspace.objects = payload.objects;
            break;
        }
        case TOPICS.command: {
            const payload = envelope.payload;
            view.exec.command = payload.text ?? null;
            break;
        }
        case TOPICS.exec: {
            const payload = envelope.payload;
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
            const payload = envelope.payload;
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
export function setConnection(view, state) {
    view.connection = state;
    if (state !== "connected") {
        view.inputLocked = true;
    }
    else if (view.exec.state !== "running") {
        view.inputLocked = false;
    }
    return view;
}
/** Whether the operator may type right now. */
export function canSend(view) {
    return view.connection === "connected" && !view.inputLocked;
}
