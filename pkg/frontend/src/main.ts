/** Page bootstrap: wires the socket, input tracking, HUD controls, and the
 * render loop together. Everything with logic worth testing lives in the
 * imported modules; this file is DOM glue only.
 */

import { ConsoleClient } from "./client.js";
import { InputTracker } from "./input.js";
import {
  ENV_NAMES,
  resetMessage,
  setAdaptationMessage,
  setAlphaMessage,
  setEnvMessage,
  steerMessage,
  type EnvName,
} from "./protocol.js";
import { CAMERA_HEIGHT, CAMERA_WIDTH, drawFrame } from "./render.js";
import { ViewModel } from "./viewmodel.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const params = new URLSearchParams(location.search);
const maxSpeed = Number(params.get("speed") ?? "6");
const wsUrl =
  params.get("ws") ?? `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;

const canvas = byId<HTMLCanvasElement>("view");
canvas.width = CAMERA_WIDTH;
canvas.height = CAMERA_HEIGHT;
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("canvas 2d context unavailable");

const vm = new ViewModel();
const client = new ConsoleClient(wsUrl, vm);
const input = new InputTracker(Number.isFinite(maxSpeed) && maxSpeed > 0 ? maxSpeed : 6);

const hudStatus = byId<HTMLSpanElement>("hud-status");
const hudTheta = byId<HTMLSpanElement>("hud-theta");
const hudError = byId<HTMLSpanElement>("hud-error");
const hudAlpha = byId<HTMLSpanElement>("hud-alpha");
const hudEnv = byId<HTMLSpanElement>("hud-env");
const hudAdaptation = byId<HTMLSpanElement>("hud-adaptation");
const hudGate = byId<HTMLSpanElement>("hud-gate");

const adaptationButton = byId<HTMLButtonElement>("toggle-adaptation");
const resetButton = byId<HTMLButtonElement>("reset");
const envSelect = byId<HTMLSelectElement>("env");
const alphaInput = byId<HTMLInputElement>("alpha");
const alphaButton = byId<HTMLButtonElement>("set-alpha");

for (const name of ENV_NAMES) {
  const opt = document.createElement("option");
  opt.value = name;
  opt.textContent = name;
  envSelect.appendChild(opt);
}

function toggleAdaptation(): void {
  const current = vm.latest?.adaptation_on ?? true;
  client.send(setAdaptationMessage(!current));
}

adaptationButton.addEventListener("click", toggleAdaptation);
resetButton.addEventListener("click", () => client.send(resetMessage()));
envSelect.addEventListener("change", () => {
  const name = envSelect.value as EnvName;
  if ((ENV_NAMES as readonly string[]).includes(name)) client.send(setEnvMessage(name));
});
alphaButton.addEventListener("click", () => client.send(setAlphaMessage(Number(alphaInput.value))));

window.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLSelectElement) return;
  const isToggle = input.keyDown(ev.code);
  if (isToggle) {
    if (!ev.repeat) toggleAdaptation();
  } else if (ev.code.startsWith("Arrow")) {
    ev.preventDefault(); // held arrows steer, they must not scroll the page
  }
});
window.addEventListener("keyup", (ev) => input.keyUp(ev.code));
window.addEventListener("blur", () => input.clear());

function pollGamepad(): void {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  for (const pad of pads) {
    if (pad && pad.connected) {
      input.setGamepadAxes(pad.axes[0] ?? 0, pad.axes[1] ?? 0);
      return;
    }
  }
}

function frame(nowMs: number): void {
  pollGamepad();
  const steer = input.sample();
  if (steer.send && vm.role === "driver") client.send(steerMessage(steer.dx, steer.dy));

  drawFrame(ctx!, vm, nowMs);
  const hud = vm.hud(nowMs);
  hudStatus.textContent = hud.status + (vm.lastError ? ` [${vm.lastError}]` : "");
  hudTheta.textContent = hud.theta;
  hudError.textContent = hud.error;
  hudAlpha.textContent = hud.alpha;
  hudEnv.textContent = hud.env;
  hudAdaptation.textContent = hud.adaptation;
  hudGate.textContent = hud.gate;

  requestAnimationFrame(frame);
}

client.connect();
requestAnimationFrame(frame);
