import { describe, expect, it } from "vitest";
import { OperatorConsole } from "../src/console.js";
import { Ctx2D, Renderer } from "../src/render.js";
import { StateFrame } from "../src/protocol.js";

/** Records every draw call so tests can assert on what was painted. */
function stubCtx(): Ctx2D & { calls: string[]; texts: string[] } {
  const calls: string[] = [];
  const texts: string[] = [];
  return {
    calls, texts,
    canvas: { width: 560, height: 360 },
    fillStyle: "", strokeStyle: "", lineWidth: 1, font: "", globalAlpha: 1,
    clearRect: () => calls.push("clearRect"),
    fillRect: () => calls.push("fillRect"),
    beginPath: () => calls.push("beginPath"),
    moveTo: () => calls.push("moveTo"),
    lineTo: () => calls.push("lineTo"),
    arc: () => calls.push("arc"),
    stroke: () => calls.push("stroke"),
    fill: () => calls.push("fill"),
    fillText: (s: string) => { calls.push("fillText"); texts.push(s); },
  };
}

function frame(seq: number, t: number, x: number): StateFrame {
  return {
    type: "state", seq, t,
    truth: { p: [x, 0, 0.1], v: [0, 0, 0], q: [1, 0, 0, 0], landed: false },
    est: { x, y: 0, z: 0.1, vx: 0, vy: 0, vz: 0, q: [1, 0, 0, 0] },
    sp: { x, y: 0, z: 0.1, yaw: 0, mode: "terrain-relative", cut: false },
    h_terr: 0, thrust: 0.013, fault: false,
  };
}

describe("renderer", () => {
  it("draws both panes from received telemetry only", () => {
    const clock = { t: 0 };
    const c = new OperatorConsole({ now: () => clock.t, send: () => {} });
    c.handleServerMessage({
      type: "hello", protocol: 1, role: "controller", config_hash: "h",
      decimation_hz: 30, tick_rate_hz: 480, preset: "p",
    });
    const n = 40;
    for (let i = 0; i < n; i++) c.handleServerMessage(frame(i + 1, i / 30, i * 0.01));

    const top = stubCtx();
    const side = stubCtx();
    new Renderer(top, side).render(c);

    expect(c.trailTruth.length).toBe(n);        // nothing invented
    // each pane draws two trails: truth and estimate, one lineTo per point
    for (const ctx of [top, side]) {
      const lineTos = ctx.calls.filter(op => op === "lineTo").length;
      expect(lineTos).toBeGreaterThanOrEqual(2 * n);
      expect(ctx.texts.join(" ")).toMatch(/view/);
    }
  });

  it("banners stale telemetry", () => {
    const clock = { t: 0 };
    const c = new OperatorConsole({ now: () => clock.t, send: () => {} });
    c.handleServerMessage({
      type: "hello", protocol: 1, role: "controller", config_hash: "h",
      decimation_hz: 30, tick_rate_hz: 480, preset: "p",
    });
    c.handleServerMessage(frame(1, 0, 0));
    clock.t = 5000;                      // stream stalled
    const top = stubCtx();
    const side = stubCtx();
    new Renderer(top, side).render(c);
    expect(top.texts.join(" ")).toMatch(/STALE/);
  });
});
