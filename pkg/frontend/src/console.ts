/** Operator console state machine.
 *
 * Pure TypeScript, no DOM: wall clock and the outbound sender are
 * injected, so the whole thing is drivable from tests with synthetic
 * events and a fake clock.  The renderer reads `view()` snapshots;
 * telemetry trails hold only frames actually received from the bridge,
 * never predictions.
 */

import {
  Ack, ClientMessage, ErrorMsg, EventMsg, Hello, ServerMessage,
  StateFrame, SUPPORTED_PROTOCOL,
} from "./protocol.js";

export type Axis = "x" | "y" | "z" | "yaw";

export type ConnectionStatus =
  "idle" | "connecting" | "connected" | "incompatible" | "closed" | "error";

export interface CommandRecord {
  clientSeq: number;
  sentAt: number;                       // wall-clock ms
  kind: "increment" | "mode";
  dx: number; dy: number; dz: number; dyaw: number;
  mode?: string;
  status: "pending" | "applied" | "rejected";
  reason?: string;
  clamped: boolean;                     // server trimmed the applied delta
  clampedLocal: boolean;                // console trimmed before sending
  coalesced: boolean;
  appliedT?: number;                    // simulation time of application
}

export interface TrailPoint { x: number; y: number; z: number; t: number }

export interface SeqGap { afterSeq: number; missed: number; at: number }

/** Per-axis metres (radians for yaw) of one emitted step; also the
 * server's per-command clamp, so a single key step is never trimmed. */
export const AXIS_STEP = 0.05;
export const YAW_STEP = 0.1;
export const EMIT_INTERVAL_MS = 500;    // ≤ 2 Hz command emission
export const STALE_MS = 1000;

const TRAIL_CAP = 4000;
const HISTORY_CAP = 60;

export interface ConsoleDeps {
  now(): number;                        // wall-clock ms
  send(msg: ClientMessage): void;
}

export class OperatorConsole {
  status: ConnectionStatus = "idle";
  statusDetail = "";
  hello: Hello | null = null;
  latest: StateFrame | null = null;
  lastFrameAt = -1;                     // wall ms of newest frame, -1 = none
  events: { t: number; event: string }[] = [];
  landed = false;
  fault = false;

  trailTruth: TrailPoint[] = [];
  trailEst: TrailPoint[] = [];
  terrainSamples: { x: number; h: number }[] = [];

  history: CommandRecord[] = [];
  seqGaps: SeqGap[] = [];
  gapCount = 0;
  private lastSeq = -1;
  private frameTimes: number[] = [];

  private clientSeq = 0;
  private held: Partial<Record<Axis, number>> = {};
  private tapped: Partial<Record<Axis, number>> = {};
  private analog: Record<Axis, number> = { x: 0, y: 0, z: 0, yaw: 0 };
  private analogTrimmed = false;
  private lastEmitAt = -Infinity;

  constructor(private deps: ConsoleDeps) {}

  // -- connection lifecycle ----------------------------------------------

  onConnecting(): void {
    this.status = "connecting";
    this.statusDetail = "";
  }

  onOpen(): void {
    // role and identity arrive with the hello
    this.status = "connected";
  }

  onClose(reason = "connection closed"): void {
    if (this.status !== "incompatible") {
      this.status = "closed";
      this.statusDetail = reason;
    }
  }

  onTransportError(text: string): void {
    if (this.status !== "incompatible") {
      this.status = "error";
      this.statusDetail = text;
    }
  }

  get role(): "controller" | "observer" | null {
    return this.hello ? this.hello.role : null;
  }

  get canCommand(): boolean {
    return this.status === "connected" && this.hello?.role === "controller";
  }

  // -- inbound ------------------------------------------------------------

  handleServerMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello": return this.onHello(msg);
      case "state": return this.onState(msg);
      case "event": return this.onEvent(msg);
      case "ack": return this.onAck(msg);
      case "error": return this.onErrorMsg(msg);
      case "pong": return;
    }
  }

  private onHello(h: Hello): void {
    if (h.protocol !== SUPPORTED_PROTOCOL) {
      this.status = "incompatible";
      this.statusDetail =
        `server speaks protocol ${h.protocol}, this console ` +
        `supports ${SUPPORTED_PROTOCOL} — please update`;
      return;
    }
    this.hello = h;
    this.status = "connected";
  }

  /** State frames and events share one strictly increasing `seq`;
   * anything missing was dropped under backpressure and is counted. */
  private trackSeq(seq: number): void {
    if (this.lastSeq >= 0 && seq > this.lastSeq + 1) {
      const missed = seq - this.lastSeq - 1;
      this.gapCount += missed;
      this.seqGaps.push({ afterSeq: this.lastSeq, missed, at: this.deps.now() });
      if (this.seqGaps.length > 10) this.seqGaps.shift();
    }
    if (seq > this.lastSeq) this.lastSeq = seq;
  }

  private onState(f: StateFrame): void {
    this.trackSeq(f.seq);
    this.latest = f;
    this.landed = f.truth.landed;
    this.fault = f.fault;
    const now = this.deps.now();
    this.lastFrameAt = now;
    this.frameTimes.push(now);
    while (this.frameTimes.length && this.frameTimes[0]! < now - 2000) {
      this.frameTimes.shift();
    }
    const [px, py, pz] = f.truth.p;
    this.pushTrail(this.trailTruth, { x: px, y: py, z: pz, t: f.t });
    this.pushTrail(this.trailEst,
                   { x: f.est.x, y: f.est.y, z: f.est.z, t: f.t });
    this.terrainSamples.push({ x: px, h: f.h_terr });
    if (this.terrainSamples.length > TRAIL_CAP) this.terrainSamples.shift();
  }

  private pushTrail(trail: TrailPoint[], p: TrailPoint): void {
    trail.push(p);
    if (trail.length > TRAIL_CAP) trail.shift();
  }

  private onEvent(e: EventMsg): void {
    this.trackSeq(e.seq);
    this.events.push({ t: e.t, event: e.event });
    if (this.events.length > 8) this.events.shift();
    if (e.event === "landed") this.landed = true;
    if (e.event === "airborne") this.landed = false;
  }

  private onAck(a: Ack): void {
    const rec = this.history.find(r => r.clientSeq === a.client_seq);
    if (!rec) return;
    rec.status = a.applied ? "applied" : "rejected";
    rec.reason = a.reason;
    rec.clamped = Boolean(a.clamped);
    rec.coalesced = Boolean(a.coalesced);
    rec.appliedT = a.t;
  }

  private onErrorMsg(e: ErrorMsg): void {
    if (e.client_seq !== undefined) {
      const rec = this.history.find(r => r.clientSeq === e.client_seq);
      if (rec) {
        rec.status = "rejected";
        rec.reason = e.error;
      }
      return;
    }
    this.statusDetail = e.error;
  }

  // -- operator input -------------------------------------------------------

  /** Key pressed/released for an axis direction (+1/-1). */
  setAxis(axis: Axis, direction: number, held: boolean): void {
    if (held) {
      this.held[axis] = direction;
      this.tapped[axis] = direction;   // a tap emits even if released fast
    } else if (this.held[axis] === direction) {
      delete this.held[axis];
    }
  }

  /** Gamepad deflections in [-1, 1] per axis; over-unity deflection is
   * trimmed here and the next emitted command is marked clamped. */
  setAnalog(ax: Partial<Record<Axis, number>>): void {
    this.analogTrimmed = false;
    for (const axis of ["x", "y", "z", "yaw"] as Axis[]) {
      let d = ax[axis] ?? 0;
      if (Math.abs(d) < 0.25) d = 0;            // deadzone
      if (Math.abs(d) > 1) {
        d = Math.sign(d);
        this.analogTrimmed = true;
      }
      this.analog[axis] = d;
    }
  }

  setMode(mode: "terrain-relative" | "absolute-altitude"): number | null {
    if (!this.canCommand) return null;
    const cseq = ++this.clientSeq;
    this.deps.send({ type: "mode", mode, client_seq: cseq });
    this.record({
      clientSeq: cseq, sentAt: this.deps.now(), kind: "mode",
      dx: 0, dy: 0, dz: 0, dyaw: 0, mode,
      status: "pending", clamped: false, clampedLocal: false,
      coalesced: false,
    });
    return cseq;
  }

  toggleMode(): number | null {
    const cur = this.latest?.sp.mode ?? "terrain-relative";
    return this.setMode(cur === "terrain-relative"
      ? "absolute-altitude" : "terrain-relative");
  }

  start(): void { if (this.canCommand) this.deps.send({ type: "start" }); }
  stop(): void { if (this.canCommand) this.deps.send({ type: "stop" }); }
  reset(): void {
    if (!this.canCommand) return;
    this.deps.send({ type: "reset" });
    this.trailTruth = [];
    this.trailEst = [];
    this.terrainSamples = [];
    this.landed = false;
  }

  /** Drive the emission window and staleness; call at render cadence.
   * At most one increment command leaves per EMIT_INTERVAL_MS. */
  tick(): void {
    if (!this.canCommand) return;
    const now = this.deps.now();
    if (now - this.lastEmitAt < EMIT_INTERVAL_MS) return;

    let trimmed = this.analogTrimmed;
    const deltas: Record<Axis, number> = { x: 0, y: 0, z: 0, yaw: 0 };
    let any = false;
    for (const axis of ["x", "y", "z", "yaw"] as Axis[]) {
      const step = axis === "yaw" ? YAW_STEP : AXIS_STEP;
      const dir = this.held[axis] ?? this.tapped[axis] ?? 0;
      let d = dir * step + this.analog[axis] * step;
      const limit = step;                       // per-axis, per-command
      if (Math.abs(d) > limit) {
        d = Math.sign(d) * limit;
        trimmed = true;
      }
      deltas[axis] = d;
      if (d !== 0) any = true;
    }
    this.tapped = {};
    if (!any) return;

    const cseq = ++this.clientSeq;
    this.deps.send({
      type: "increment", client_seq: cseq,
      dx: deltas.x, dy: deltas.y, dz: deltas.z, dyaw: deltas.yaw,
    });
    this.record({
      clientSeq: cseq, sentAt: now, kind: "increment",
      dx: deltas.x, dy: deltas.y, dz: deltas.z, dyaw: deltas.yaw,
      status: "pending", clamped: false, clampedLocal: trimmed,
      coalesced: false,
    });
    this.lastEmitAt = now;
  }

  private record(rec: CommandRecord): void {
    this.history.push(rec);
    if (this.history.length > HISTORY_CAP) this.history.shift();
  }

  // -- view ----------------------------------------------------------------

  get stale(): boolean {
    return this.status === "connected" && this.lastFrameAt >= 0 &&
      this.deps.now() - this.lastFrameAt > STALE_MS;
  }

  /** Observed telemetry rate over the last two seconds. */
  get frameRateHz(): number {
    return this.frameTimes.length / 2;
  }
}
