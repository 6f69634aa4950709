/** Keyboard and gamepad bindings.
 *
 * Key events are consumed as plain `{key, repeat}` shapes so tests can
 * drive the console with synthetic events; `attach()` wires the same
 * handlers to a real DOM target.
 */

import { Axis, OperatorConsole } from "./console.js";

export interface KeyLike { key: string; repeat?: boolean }

export interface AxisBinding { axis: Axis; direction: 1 | -1 }

/** Defaults: WASD in the horizontal plane (x forward, y left),
 * R/F climb/descend, Q/E yaw; arrows mirror WASD. */
export const DEFAULT_BINDINGS: Record<string, AxisBinding> = {
  w: { axis: "x", direction: 1 },
  s: { axis: "x", direction: -1 },
  a: { axis: "y", direction: 1 },
  d: { axis: "y", direction: -1 },
  ArrowUp: { axis: "x", direction: 1 },
  ArrowDown: { axis: "x", direction: -1 },
  ArrowLeft: { axis: "y", direction: 1 },
  ArrowRight: { axis: "y", direction: -1 },
  r: { axis: "z", direction: 1 },
  f: { axis: "z", direction: -1 },
  q: { axis: "yaw", direction: 1 },
  e: { axis: "yaw", direction: -1 },
};

export class KeyboardInput {
  constructor(
    private console_: OperatorConsole,
    public bindings: Record<string, AxisBinding> = DEFAULT_BINDINGS,
  ) {}

  keyDown(evt: KeyLike): boolean {
    if (evt.repeat) return false;       // auto-repeat is not a new press
    const b = this.bindings[evt.key];
    if (b) {
      this.console_.setAxis(b.axis, b.direction, true);
      return true;
    }
    switch (evt.key) {
      case "m": this.console_.toggleMode(); return true;
      case "Enter": this.console_.start(); return true;
      case "Escape": this.console_.stop(); return true;
      case "Delete": this.console_.reset(); return true;
    }
    return false;
  }

  keyUp(evt: KeyLike): boolean {
    const b = this.bindings[evt.key];
    if (!b) return false;
    this.console_.setAxis(b.axis, b.direction, false);
    return true;
  }

  attach(target: EventTarget): void {
    target.addEventListener("keydown", e => {
      if (this.keyDown(e as KeyboardEvent)) (e as Event).preventDefault();
    });
    target.addEventListener("keyup", e => {
      if (this.keyUp(e as KeyboardEvent)) (e as Event).preventDefault();
    });
  }
}

/** Map the first connected gamepad's sticks onto the same axes:
 * left stick plans (x forward, y left), right stick vertical = climb,
 * right stick horizontal = yaw. */
export function pollGamepad(console_: OperatorConsole,
                            pads: (Gamepad | null)[]): void {
  const pad = pads.find(p => p && p.connected);
  if (!pad) return;
  const ax = pad.axes;
  console_.setAnalog({
    x: -(ax[1] ?? 0),                   // stick up = forward
    y: -(ax[0] ?? 0),                   // stick left = +y
    z: -(ax[3] ?? 0),
    yaw: -(ax[2] ?? 0),
  });
}
