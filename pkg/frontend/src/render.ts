/** Canvas rendering of the simulated endoscopic view.
 *
 * Crosshair at the image center, feature blobs, the target marker with its
 * recent trail (failure modes like orbiting show up as a curling trail), and
 * a gray overlay whenever the view is stale or disconnected. Defensive
 * throughout: a null state still renders a frame.
 */

import type { ViewModel } from "./viewmodel.js";

export const CAMERA_WIDTH = 380;
export const CAMERA_HEIGHT = 400;

const BACKGROUND = "#101418";
const CROSSHAIR = "#3c4854";
const FEATURE = "#7fd4a8";
const TARGET = "#ffb347";
const TARGET_RING = "#ffd9a0";
const TRAIL = "255, 179, 71"; // TARGET as rgb triplet for alpha fades

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  nowMs: number,
  width = CAMERA_WIDTH,
  height = CAMERA_HEIGHT,
): void {
  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = CROSSHAIR;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(width / 2, 0);
  ctx.lineTo(width / 2, height);
  ctx.moveTo(0, height / 2);
  ctx.lineTo(width, height / 2);
  ctx.stroke();

  const s = vm.latest;
  if (s) {
    ctx.fillStyle = FEATURE;
    for (const [x, y] of s.features) {
      ctx.beginPath();
      ctx.arc(x, y, 3, 0, 2 * Math.PI);
      ctx.fill();
    }

    for (let i = 1; i < vm.trail.length; i++) {
      const a = vm.trail[i - 1];
      const b = vm.trail[i];
      if (!a || !b) continue;
      ctx.strokeStyle = `rgba(${TRAIL}, ${(0.6 * i) / vm.trail.length})`;
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.stroke();
    }

    const [tx, ty] = s.target_px;
    ctx.strokeStyle = TARGET_RING;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(tx, ty, 8, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = TARGET;
    ctx.beginPath();
    ctx.arc(tx, ty, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  if (vm.isStale(nowMs)) {
    ctx.fillStyle = "rgba(128, 128, 128, 0.55)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#e8e8e8";
    ctx.font = "14px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(
      vm.status === "open" ? "signal stale" : "reconnecting…",
      width / 2,
      height / 2 - 12,
    );
  }
}
