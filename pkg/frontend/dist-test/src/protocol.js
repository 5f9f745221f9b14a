/**
 * Envelope protocol shared with the arm service.
 *
 * One JSON object per WebSocket text frame (or per line on the raw TCP
 * bridge): {topic, seq, ts_ms, payload}. Sequence numbers are per topic,
 * start at 1 and never gap; timestamps are milliseconds of simulated
 * session time.
 */
export const TOPICS = {
    utterance: "user/utterance",
    reply: "assistant/reply",
    command: "robot/command",
    state: "robot/state",
    objects: "scene/objects",
    exec: "exec/status",
    event: "session/event",
};
export function parseEnvelope(line) {
    const doc = JSON.parse(line);
    if (typeof doc !== "object" || doc === null) {
        throw new Error("envelope must be a JSON object");
    }
    const record = doc;
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
export function encodeUtterance(text) {
    return JSON.stringify({ topic: TOPICS.utterance, payload: { text } });
}
