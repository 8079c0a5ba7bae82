/** Keyboard and gamepad steering, normalized to a maximum pixel speed.
 *
 * Arrow keys and WSD steer; KeyA is the adaptation toggle, so the left half
 * of WASD is arrow-only (the toggle contract wins the key collision).
 * Sampling runs at the client frame rate: a nonzero vector is sent every
 * frame it is held, and releasing the last key emits exactly one explicit
 * zero steer so the server-side hold window is cancelled, not outwaited.
 */

const KEY_VECTORS: Record<string, [number, number]> = {
  ArrowUp: [0, -1],
  ArrowDown: [0, 1],
  ArrowLeft: [-1, 0],
  ArrowRight: [1, 0],
  KeyW: [0, -1],
  KeyS: [0, 1],
  KeyD: [1, 0],
};

export const ADAPTATION_TOGGLE_CODE = "KeyA";
export const GAMEPAD_DEADZONE = 0.15;

export interface SteerSample {
  dx: number;
  dy: number;
  /** False only when idle and the zero command was already delivered. */
  send: boolean;
}

export class InputTracker {
  readonly maxSpeed: number;
  private held = new Set<string>();
  private gamepad: [number, number] = [0, 0];
  private idleDelivered = true;

  constructor(maxSpeed = 6) {
    if (!Number.isFinite(maxSpeed) || maxSpeed <= 0) {
      throw new Error("maxSpeed must be a positive number");
    }
    this.maxSpeed = maxSpeed;
  }

  /** Returns true when the key toggles adaptation instead of steering. */
  keyDown(code: string): boolean {
    if (code === ADAPTATION_TOGGLE_CODE) return true;
    if (code in KEY_VECTORS) this.held.add(code);
    return false;
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Raw axes in [-1, 1]; values inside the deadzone count as centered. */
  setGamepadAxes(x: number, y: number): void {
    const fx = Number.isFinite(x) ? x : 0;
    const fy = Number.isFinite(y) ? y : 0;
    this.gamepad = Math.hypot(fx, fy) < GAMEPAD_DEADZONE ? [0, 0] : [fx, fy];
  }

  clear(): void {
    this.held.clear();
    this.gamepad = [0, 0];
  }

  /** One frame's steer vector; magnitude never exceeds maxSpeed. */
  sample(): SteerSample {
    let dx = this.gamepad[0];
    let dy = this.gamepad[1];
    for (const code of this.held) {
      const v = KEY_VECTORS[code];
      if (v) {
        dx += v[0];
        dy += v[1];
      }
    }
    const norm = Math.hypot(dx, dy);
    if (norm === 0) {
      const send = !this.idleDelivered;
      this.idleDelivered = true;
      return { dx: 0, dy: 0, send };
    }
    this.idleDelivered = false;
    const scale = norm > 1 ? this.maxSpeed / norm : this.maxSpeed;
    return { dx: dx * scale, dy: dy * scale, send: true };
  }
}
