/** Wire protocol: message shapes, arrival validation, and outgoing builders.
 *
 * Everything received is validated here before it can touch any view state,
 * and everything sent passes through builders that refuse to emit a
 * non-finite number. The server does its own validation; the point of doing
 * it again client-side is that a buggy console degrades to an error reply on
 * the wire, never to a corrupted view or a poisoned simulator.
 */

export const PROTOCOL_SCHEMA = 1;

export const ENV_NAMES = ["no_bend", "one_bend", "two_bend"] as const;
export type EnvName = (typeof ENV_NAMES)[number];

export interface HelloMessage {
  type: "hello";
  schema: number;
  role: "driver" | "viewer";
}

export interface StateMessage {
  type: "state";
  t: number;
  target_px: [number, number];
  theta_hat: number;
  gate_open: boolean;
  error_norm: number;
  adaptation_on: boolean;
  alpha: number;
  env: string;
  features: Array<[number, number]>;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage = HelloMessage | StateMessage | ErrorMessage;

function isFinitePair(x: unknown): x is [number, number] {
  return (
    Array.isArray(x) &&
    x.length === 2 &&
    typeof x[0] === "number" &&
    Number.isFinite(x[0]) &&
    typeof x[1] === "number" &&
    Number.isFinite(x[1])
  );
}

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

export function isHelloMessage(x: unknown): x is HelloMessage {
  return (
    isRecord(x) &&
    x.type === "hello" &&
    typeof x.schema === "number" &&
    Number.isInteger(x.schema) &&
    (x.role === "driver" || x.role === "viewer")
  );
}

export function isStateMessage(x: unknown): x is StateMessage {
  return (
    isRecord(x) &&
    x.type === "state" &&
    typeof x.t === "number" &&
    Number.isInteger(x.t) &&
    x.t >= 0 &&
    isFinitePair(x.target_px) &&
    typeof x.theta_hat === "number" &&
    Number.isFinite(x.theta_hat) &&
    typeof x.gate_open === "boolean" &&
    typeof x.error_norm === "number" &&
    Number.isFinite(x.error_norm) &&
    typeof x.adaptation_on === "boolean" &&
    typeof x.alpha === "number" &&
    Number.isFinite(x.alpha) &&
    typeof x.env === "string" &&
    Array.isArray(x.features) &&
    x.features.every(isFinitePair)
  );
}

export function isErrorMessage(x: unknown): x is ErrorMessage {
  return isRecord(x) && x.type === "error" && typeof x.reason === "string";
}

/** Parse raw socket text into a validated message, or null for anything off. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let x: unknown;
  try {
    x = JSON.parse(raw);
  } catch {
    return null;
  }
  if (isHelloMessage(x)) return x;
  if (isStateMessage(x)) return x;
  if (isErrorMessage(x)) return x;
  return null;
}

function finiteOrZero(v: number): number {
  return Number.isFinite(v) ? v : 0;
}

/** Steer command; non-finite components are zeroed, never forwarded. */
export function steerMessage(dx: number, dy: number): string {
  return JSON.stringify({ type: "steer", dx: finiteOrZero(dx), dy: finiteOrZero(dy) });
}

export function setAdaptationMessage(on: boolean): string {
  return JSON.stringify({ type: "set_adaptation", on: on === true });
}

/** Smoothing factor change; null (nothing to send) unless alpha is in (0, 1]. */
export function setAlphaMessage(alpha: number): string | null {
  if (!Number.isFinite(alpha) || alpha <= 0 || alpha > 1) return null;
  return JSON.stringify({ type: "set_alpha", alpha });
}

export function setEnvMessage(name: EnvName): string {
  return JSON.stringify({ type: "set_env", name });
}

export function resetMessage(): string {
  return JSON.stringify({ type: "reset" });
}
