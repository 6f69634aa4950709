import { beforeEach, describe, expect, it } from "vitest";
import {
  AXIS_STEP, EMIT_INTERVAL_MS, OperatorConsole,
} from "../src/console.js";
import { ClientMessage, Hello, StateFrame } from "../src/protocol.js";

/** Console on a fake clock with captured outbound messages. */
function makeConsole() {
  const sent: ClientMessage[] = [];
  const clock = { t: 0 };
  const c = new OperatorConsole({
    now: () => clock.t,
    send: m => sent.push(m),
  });
  return { c, sent, clock };
}

const HELLO: Hello = {
  type: "hello", protocol: 1, role: "controller",
  config_hash: "deadbeef", decimation_hz: 30, tick_rate_hz: 480,
  preset: "testpreset",
};

function frame(seq: number, t: number, over: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state", seq, t,
    truth: { p: [0, 0, 0.1], v: [0, 0, 0], q: [1, 0, 0, 0], landed: false },
    est: { x: 0, y: 0, z: 0.1, vx: 0, vy: 0, vz: 0, q: [1, 0, 0, 0] },
    sp: { x: 0, y: 0, z: 0.1, yaw: 0, mode: "terrain-relative", cut: false },
    h_terr: 0, thrust: 0.013, fault: false,
    ...over,
  };
}

describe("connection and identity", () => {
  it("accepts a matching protocol and exposes the grant", () => {
    const { c } = makeConsole();
    c.onConnecting();
    c.onOpen();
    c.handleServerMessage(HELLO);
    expect(c.status).toBe("connected");
    expect(c.role).toBe("controller");
    expect(c.canCommand).toBe(true);
    expect(c.hello!.config_hash).toBe("deadbeef");
  });

  it("flags a protocol mismatch explicitly", () => {
    const { c } = makeConsole();
    c.handleServerMessage({ ...HELLO, protocol: 99 });
    expect(c.status).toBe("incompatible");
    expect(c.statusDetail).toMatch(/protocol 99/);
    expect(c.canCommand).toBe(false);
  });

  it("observers cannot command", () => {
    const { c, sent, clock } = makeConsole();
    c.handleServerMessage({ ...HELLO, role: "observer" });
    expect(c.canCommand).toBe(false);
    c.setAxis("x", 1, true);
    clock.t += EMIT_INTERVAL_MS * 3;
    c.tick();
    c.start();
    expect(sent.length).toBe(0);
  });
});

describe("telemetry intake", () => {
  let env: ReturnType<typeof makeConsole>;
  beforeEach(() => {
    env = makeConsole();
    env.c.handleServerMessage(HELLO);
  });

  it("trails contain exactly the frames received, nothing predicted", () => {
    for (let i = 0; i < 7; i++) {
      env.c.handleServerMessage(frame(i + 1, i / 30));
    }
    expect(env.c.trailTruth.length).toBe(7);
    expect(env.c.trailEst.length).toBe(7);
    expect(env.c.latest!.seq).toBe(7);
  });

  it("counts sequence gaps across states and events", () => {
    env.c.handleServerMessage(frame(1, 0));
    env.c.handleServerMessage(frame(2, 1 / 30));
    env.c.handleServerMessage(frame(5, 4 / 30));      // 3, 4 dropped
    expect(env.c.gapCount).toBe(2);
    expect(env.c.seqGaps.at(-1)).toMatchObject({ afterSeq: 2, missed: 2 });
    env.c.handleServerMessage(
      { type: "event", seq: 7, t: 0.2, event: "started" }); // 6 dropped
    expect(env.c.gapCount).toBe(3);
  });

  it("measures the delivered frame rate", () => {
    for (let i = 0; i < 60; i++) {
      env.clock.t = i * (1000 / 30);
      env.c.handleServerMessage(frame(i + 1, i / 30));
    }
    expect(env.c.frameRateHz).toBeGreaterThan(25);
    expect(env.c.frameRateHz).toBeLessThan(35);
  });

  it("raises the stale flag after a silent second", () => {
    env.c.handleServerMessage(frame(1, 0));
    env.clock.t = 900;
    expect(env.c.stale).toBe(false);
    env.clock.t = 1100;
    expect(env.c.stale).toBe(true);
    env.c.handleServerMessage(frame(2, 1 / 30));
    expect(env.c.stale).toBe(false);
  });

  it("tracks landing through events and frames", () => {
    env.c.handleServerMessage(
      { type: "event", seq: 1, t: 5, event: "landed" });
    expect(env.c.landed).toBe(true);
    env.c.handleServerMessage(
      { type: "event", seq: 2, t: 6, event: "airborne" });
    expect(env.c.landed).toBe(false);
  });
});

describe("command emission", () => {
  let env: ReturnType<typeof makeConsole>;
  beforeEach(() => {
    env = makeConsole();
    env.c.handleServerMessage(HELLO);
  });

  function pump(ms: number, step = 50) {
    for (let t = 0; t < ms; t += step) {
      env.clock.t += step;
      env.c.tick();
    }
  }

  it("a tap emits exactly one increment with a fresh sequence number", () => {
    env.c.setAxis("x", 1, true);
    env.c.setAxis("x", 1, false);       // released before any tick
    pump(2000);
    const incs = env.sent.filter(m => m.type === "increment");
    expect(incs.length).toBe(1);
    expect(incs[0]).toMatchObject({ dx: AXIS_STEP, dy: 0, dz: 0 });
    expect((incs[0] as { client_seq: number }).client_seq).toBe(1);
  });

  it("a held axis obeys the 2 Hz cap: ~10 commands over 5 s", () => {
    env.c.setAxis("x", 1, true);
    pump(5000);
    env.c.setAxis("x", 1, false);
    const times = env.c.history.map(r => r.sentAt);
    expect(times.length).toBeGreaterThanOrEqual(9);
    expect(times.length).toBeLessThanOrEqual(11);
    for (let i = 1; i < times.length; i++) {
      expect(times[i]! - times[i - 1]!).toBeGreaterThanOrEqual(
        EMIT_INTERVAL_MS);
    }
  });

  it("simultaneous axes ride one message", () => {
    env.c.setAxis("x", 1, true);
    env.c.setAxis("z", -1, true);
    pump(100);
    expect(env.sent.at(-1)).toMatchObject({
      type: "increment", dx: AXIS_STEP, dz: -AXIS_STEP,
    });
  });

  it("over-unity analog deflection is trimmed and flagged", () => {
    env.c.setAnalog({ x: 1.8 });
    pump(100);
    expect(env.sent.at(-1)).toMatchObject({ dx: AXIS_STEP });
    expect(env.c.history.at(-1)!.clampedLocal).toBe(true);
  });

  it("deadzone deflection emits nothing", () => {
    env.c.setAnalog({ x: 0.1, y: -0.2 });
    pump(2000);
    expect(env.sent.length).toBe(0);
  });

  it("mode changes bypass the rate window", () => {
    env.c.setAxis("x", 1, true);
    pump(100);                           // consumes the emission window
    const n = env.sent.length;
    env.c.setMode("absolute-altitude");
    expect(env.sent.length).toBe(n + 1);
    expect(env.sent.at(-1)).toMatchObject(
      { type: "mode", mode: "absolute-altitude" });
  });
});

describe("command history and acks", () => {
  let env: ReturnType<typeof makeConsole>;
  beforeEach(() => {
    env = makeConsole();
    env.c.handleServerMessage(HELLO);
  });

  it("pairs acks to history and shows clamping distinctly", () => {
    env.c.setAxis("z", 1, true);
    env.c.setAxis("z", 1, false);
    env.clock.t += 100;
    env.c.tick();
    const rec = env.c.history.at(-1)!;
    expect(rec.status).toBe("pending");
    env.c.handleServerMessage({
      type: "ack", client_seq: rec.clientSeq, applied: true,
      t: 1.25, clamped: true, coalesced: false,
    });
    expect(rec.status).toBe("applied");
    expect(rec.clamped).toBe(true);
    expect(rec.appliedT).toBe(1.25);
  });

  it("rejected commands carry the server reason", () => {
    env.c.setAxis("x", -1, true);
    env.c.setAxis("x", -1, false);
    env.clock.t += 100;
    env.c.tick();
    const rec = env.c.history.at(-1)!;
    env.c.handleServerMessage({
      type: "ack", client_seq: rec.clientSeq, applied: false,
      reason: "mission-not-interactive",
    });
    expect(rec.status).toBe("rejected");
    expect(rec.reason).toBe("mission-not-interactive");
  });

  it("command-level error frames mark the record rejected", () => {
    const cseq = env.c.setMode("absolute-altitude")!;
    env.c.handleServerMessage(
      { type: "error", error: "bad command: nope", client_seq: cseq });
    expect(env.c.history.at(-1)!.status).toBe("rejected");
    expect(env.c.history.at(-1)!.reason).toMatch(/bad command/);
  });
});
