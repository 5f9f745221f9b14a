/** DOM wiring: envelope stream in, transcript + canvas out, one input box. */

import { ConsoleClient } from "./client.js";
import { drawWorkspace } from "./render.js";
import {
  ViewState,
  applyEnvelope,
  canSend,
  initialView,
  setConnection,
} from "./viewmodel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const transcriptEl = el<HTMLDivElement>("transcript");
const inputEl = el<HTMLInputElement>("utterance");
const sendEl = el<HTMLButtonElement>("send");
const bannerEl = el<HTMLDivElement>("banner");
const execEl = el<HTMLDivElement>("exec");
const canvasEl = el<HTMLCanvasElement>("workspace");

let view: ViewState = initialView();
let transcriptDirty = true;

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new ConsoleClient(wsUrl, {
  onEnvelope: (envelope) => {
    applyEnvelope(view, envelope);
    if (
      envelope.topic === "user/utterance" ||
      envelope.topic === "assistant/reply"
    ) {
      transcriptDirty = true;
    }
  },
  onConnect: () => {
    view = initialView(); // fresh server session; no replay
    setConnection(view, "connected");
    transcriptDirty = true;
  },
  onDisconnect: () => {
    setConnection(view, "disconnected");
  },
});

function renderTranscript(): void {
  transcriptEl.textContent = "";
  for (const entry of view.transcript) {
    const row = document.createElement("div");
    row.className = `turn ${entry.role}${entry.clarification ? " clarification" : ""}`;
    const who = document.createElement("span");
    who.className = "who";
    who.textContent = entry.role === "operator" ? "you" : "arm";
    const body = document.createElement("span");
    body.textContent = entry.text;
    row.append(who, body);
    transcriptEl.append(row);
  }
  transcriptEl.scrollTop = transcriptEl.scrollHeight;
}

function renderChrome(): void {
  if (view.connection === "connected") {
    bannerEl.className = "banner hidden";
  } else {
    bannerEl.className = "banner";
    bannerEl.textContent =
      view.connection === "connecting"
        ? "connecting to the arm service..."
        : "disconnected - retrying";
  }
  const sendable = canSend(view);
  inputEl.disabled = !sendable;
  sendEl.disabled = !sendable;
  inputEl.placeholder = view.pendingClarification
    ? "the assistant is asking you - answer here"
    : "tell the arm what to do";
  inputEl.classList.toggle("asking", view.pendingClarification);
  if (view.pendingClarification && sendable) {
    inputEl.focus();
  }

  if (view.exec.state === "idle") {
    execEl.textContent = "";
  } else {
    const pieces: string[] = [view.exec.state];
    if (view.exec.command) pieces.push(view.exec.command);
    if (view.exec.primitive) pieces.push(`(${view.exec.primitive})`);
    if (view.exec.error) pieces.push(`- ${view.exec.error}`);
    execEl.textContent = pieces.join(" ");
  }
  execEl.className = `exec ${view.exec.state}`;
}

function frame(): void {
  if (transcriptDirty) {
    renderTranscript();
    transcriptDirty = false;
  }
  renderChrome();
  drawWorkspace(canvasEl, view);
  requestAnimationFrame(frame);
}

function send(): void {
  const text = inputEl.value.trim();
  if (!text || !canSend(view)) return;
  if (client.send(text)) {
    inputEl.value = "";
  }
}

sendEl.addEventListener("click", send);
inputEl.addEventListener("keydown", (event) => {
  if (event.key === "Enter") send();
});

client.connect();
requestAnimationFrame(frame);
