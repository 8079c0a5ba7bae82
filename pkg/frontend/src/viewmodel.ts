/** Client-side session state: the latest validated broadcast, connection
 * status, the target trail, and staleness.
 *
 * Time is always passed in (milliseconds, any monotonic clock) so the whole
 * model is testable without timers. A view is stale when no state has
 * arrived for over a second; the renderer grays stale views, whatever the
 * socket thinks it is doing.
 */

import type { StateMessage } from "./protocol.js";

export const STALE_AFTER_MS = 1000;
export const TRAIL_LENGTH = 90; // ~3 s of target history at camera rate

export type ConnectionStatus = "connecting" | "open" | "closed";
export type Role = "driver" | "viewer";

export interface HudModel {
  status: string;
  theta: string;
  error: string;
  alpha: string;
  env: string;
  adaptation: string;
  gate: string;
}

export class ViewModel {
  status: ConnectionStatus = "connecting";
  role: Role | null = null;
  latest: StateMessage | null = null;
  lastStateMs: number | null = null;
  lastError: string | null = null;
  readonly trail: Array<[number, number]> = [];

  noteOpen(): void {
    this.status = "open";
    this.lastError = null;
  }

  noteClosed(): void {
    this.status = "closed";
    this.role = null;
  }

  setRole(role: Role): void {
    this.role = role;
  }

  noteError(reason: string): void {
    this.lastError = reason;
  }

  applyState(msg: StateMessage, nowMs: number): void {
    this.latest = msg;
    this.lastStateMs = nowMs;
    this.trail.push([msg.target_px[0], msg.target_px[1]]);
    while (this.trail.length > TRAIL_LENGTH) this.trail.shift();
  }

  isStale(nowMs: number): boolean {
    if (this.status !== "open" || this.lastStateMs === null) return true;
    return nowMs - this.lastStateMs > STALE_AFTER_MS;
  }

  hud(nowMs: number): HudModel {
    const s = this.latest;
    const base =
      this.status === "open"
        ? this.role ?? "open"
        : this.status === "closed"
          ? "disconnected, reconnecting…"
          : "connecting…";
    const status = this.status === "open" && this.isStale(nowMs) ? `${base} (stale)` : base;
    return {
      status,
      theta: s ? `${((s.theta_hat * 180) / Math.PI).toFixed(1)}°` : "–",
      error: s ? `${s.error_norm.toFixed(1)} px` : "–",
      alpha: s ? s.alpha.toFixed(2) : "–",
      env: s ? s.env : "–",
      adaptation: s ? (s.adaptation_on ? "on" : "off") : "–",
      gate: s ? (s.gate_open ? "open" : "closed") : "–",
    };
  }
}
