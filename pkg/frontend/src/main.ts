/** Browser entry point: wires the stylus pad, scene canvas, panel, and client. */

import { TeleopClient } from "./client.js";
import { ControllerName, ParamName, isStateMsg } from "./protocol.js";
import { drawHud, drawScene, hudModel } from "./scene.js";
import { UiSession } from "./session.js";
import { VirtualStylus } from "./stylus.js";

const WS_URL = (() => {
  const qs = new URLSearchParams(window.location.search);
  const explicit = qs.get("ws");
  if (explicit) return explicit;
  const host = window.location.hostname || "127.0.0.1";
  return `ws://${host}:8000/ws/teleop`;
})();

const scene = document.getElementById("scene") as HTMLCanvasElement;
const pad = document.getElementById("stylus-pad") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const sceneCtx = scene.getContext("2d")!;
const padCtx = pad.getContext("2d")!;

const session = new UiSession();
const stylus = new VirtualStylus(5.0);
const client = new TeleopClient(WS_URL, (url) => new WebSocket(url), {
  onMessage: (msg) => {
    if (isStateMsg(msg)) {
      session.applyState(msg);
      syncPanel();
    } else {
      session.applyWarning(msg.message);
    }
  },
  onOpen: () => session.markOpen(),
  onClose: () => session.markClosed(),
  onDrop: () => session.noteDroppedCommand(),
});
client.connect();

// --- stylus pad ---------------------------------------------------------------

function padToCm(ev: PointerEvent): [number, number] {
  const rect = pad.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width - 0.5) * 2 * stylus.maxCm;
  const y = -(((ev.clientY - rect.top) / rect.height - 0.5) * 2 * stylus.maxCm);
  return [x, y];
}

pad.addEventListener("pointerdown", (ev) => {
  pad.setPointerCapture(ev.pointerId);
  stylus.press(...padToCm(ev));
});
pad.addEventListener("pointermove", (ev) => stylus.move(...padToCm(ev)));
pad.addEventListener("pointerup", () => stylus.release());
pad.addEventListener("pointercancel", () => stylus.release());

function drawPad(dispCm: [number, number]): void {
  const w = pad.width;
  const h = pad.height;
  padCtx.clearRect(0, 0, w, h);
  padCtx.fillStyle = "#10141a";
  padCtx.fillRect(0, 0, w, h);
  padCtx.strokeStyle = "#39414d";
  padCtx.strokeRect(1, 1, w - 2, h - 2);
  padCtx.beginPath();
  padCtx.moveTo(w / 2, 0);
  padCtx.lineTo(w / 2, h);
  padCtx.moveTo(0, h / 2);
  padCtx.lineTo(w, h / 2);
  padCtx.stroke();
  const kx = w / 2 + (dispCm[0] / stylus.maxCm) * (w / 2 - 10);
  const ky = h / 2 - (dispCm[1] / stylus.maxCm) * (h / 2 - 10);
  padCtx.fillStyle = stylus.isHeld ? "#e2574c" : "#cfd8e3";
  padCtx.beginPath();
  padCtx.arc(kx, ky, 9, 0, 2 * Math.PI);
  padCtx.fill();
}

// --- parameter panel -----------------------------------------------------------

const controllerSelect = document.getElementById("controller") as HTMLSelectElement;
controllerSelect.addEventListener("change", () => {
  client.sendMode(controllerSelect.value as ControllerName);
});

(document.getElementById("reset") as HTMLButtonElement).addEventListener("click", () => {
  client.sendReset();
  session.trail.clear();
});

const paramInputs: Partial<Record<ParamName, HTMLInputElement>> = {};
for (const name of ["k", "k_v", "e_max", "w_cbf", "w_l2"] as ParamName[]) {
  const input = document.getElementById(`param-${name}`) as HTMLInputElement | null;
  if (!input) continue;
  paramInputs[name] = input;
  input.addEventListener("change", () => {
    const value = Number(input.value);
    if (Number.isFinite(value) && value > 0) client.sendParam(name, value);
  });
}

function syncPanel(): void {
  const cfg = session.config;
  if (!cfg) return;
  if (document.activeElement !== controllerSelect) controllerSelect.value = cfg.controller;
  for (const [name, input] of Object.entries(paramInputs)) {
    if (document.activeElement === input) continue;
    const value = cfg[name as ParamName];
    if (input && Number.isFinite(value)) input.value = String(value);
  }
}

// --- render loop ----------------------------------------------------------------

let lastFrame = performance.now();

function frame(now: number): void {
  const dt = Math.min(0.1, (now - lastFrame) / 1000);
  lastFrame = now;
  const disp = stylus.tick(dt);
  client.setStylus([disp[0], disp[1]]);
  client.flushStylus(now);

  const frozen = session.status !== "open";
  banner.style.display = frozen ? "block" : "none";
  banner.textContent =
    session.status === "connecting" ? "connecting…" : "connection lost; frame frozen";

  drawScene(sceneCtx, session.latest, session.trail.points(), frozen);
  drawHud(sceneCtx, hudModel(session.latest, session.status));
  drawPad(disp);
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
