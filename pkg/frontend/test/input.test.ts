import { describe, expect, it } from "vitest";

import { ADAPTATION_TOGGLE_CODE, GAMEPAD_DEADZONE, InputTracker } from "../src/input.js";

describe("keyboard steering", () => {
  it("holding right steers at exactly max speed", () => {
    const t = new InputTracker(6);
    t.keyDown("ArrowRight");
    expect(t.sample()).toEqual({ dx: 6, dy: 0, send: true });
    expect(t.sample()).toEqual({ dx: 6, dy: 0, send: true }); // streams while held
  });

  it("diagonals are normalized, not faster", () => {
    const t = new InputTracker(6);
    t.keyDown("ArrowRight");
    t.keyDown("ArrowUp");
    const s = t.sample();
    expect(Math.hypot(s.dx, s.dy)).toBeCloseTo(6, 10);
    expect(s.dx).toBeGreaterThan(0);
    expect(s.dy).toBeLessThan(0); // screen-up is negative y
  });

  it("release sends one explicit zero, then goes quiet", () => {
    const t = new InputTracker(6);
    t.keyDown("KeyD");
    t.sample();
    t.keyUp("KeyD");
    expect(t.sample()).toEqual({ dx: 0, dy: 0, send: true });
    expect(t.sample()).toEqual({ dx: 0, dy: 0, send: false });
  });

  it("opposing keys cancel and still deliver the explicit zero once", () => {
    const t = new InputTracker(6);
    t.keyDown("ArrowRight");
    t.sample();
    t.keyDown("ArrowLeft");
    expect(t.sample()).toEqual({ dx: 0, dy: 0, send: true });
    expect(t.sample().send).toBe(false);
  });

  it("the adaptation key toggles instead of steering left", () => {
    const t = new InputTracker(6);
    expect(t.keyDown(ADAPTATION_TOGGLE_CODE)).toBe(true);
    expect(t.sample().send).toBe(false); // KeyA contributed nothing
    expect(t.keyDown("ArrowLeft")).toBe(false);
    expect(t.sample().dx).toBe(-6);
  });

  it("W, S and D steer; unknown codes are ignored", () => {
    const t = new InputTracker(4);
    t.keyDown("KeyW");
    expect(t.sample()).toEqual({ dx: 0, dy: -4, send: true });
    t.keyUp("KeyW");
    t.sample();
    t.keyDown("KeyX");
    expect(t.sample().send).toBe(false);
  });
});

describe("gamepad steering", () => {
  it("axes inside the deadzone count as centered", () => {
    const t = new InputTracker(6);
    t.setGamepadAxes(GAMEPAD_DEADZONE / 2, 0);
    expect(t.sample().send).toBe(false);
  });

  it("partial deflection scales proportionally, full deflection caps at max", () => {
    const t = new InputTracker(6);
    t.setGamepadAxes(0.5, 0);
    expect(t.sample().dx).toBeCloseTo(3, 10);
    t.setGamepadAxes(1, 1);
    const s = t.sample();
    expect(Math.hypot(s.dx, s.dy)).toBeCloseTo(6, 10);
  });

  it("non-finite axes are treated as centered, never forwarded", () => {
    const t = new InputTracker(6);
    t.setGamepadAxes(Number.NaN, Number.POSITIVE_INFINITY);
    const s = t.sample();
    expect(s.dx).toBe(0);
    expect(s.dy).toBe(0);
  });

  it("keyboard and stick combine but never exceed max speed", () => {
    const t = new InputTracker(6);
    t.keyDown("ArrowRight");
    t.setGamepadAxes(0.9, 0);
    const s = t.sample();
    expect(Math.hypot(s.dx, s.dy)).toBeCloseTo(6, 10);
  });

  it("clear drops held keys and stick state", () => {
    const t = new InputTracker(6);
    t.keyDown("ArrowRight");
    t.setGamepadAxes(1, 0);
    t.sample();
    t.clear();
    expect(t.sample()).toEqual({ dx: 0, dy: 0, send: true }); // the release zero
  });
});

describe("construction", () => {
  it("rejects a non-positive or non-finite max speed", () => {
    expect(() => new InputTracker(0)).toThrow();
    expect(() => new InputTracker(Number.NaN)).toThrow();
  });
});
