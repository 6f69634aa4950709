/** Wire types for the telemetry bridge (see PROTOCOL.md at the repo
 * root).  One JSON object per WebSocket text frame. */

export const SUPPORTED_PROTOCOL = 1;

export interface Hello {
  type: "hello";
  protocol: number;
  role: "controller" | "observer";
  config_hash: string;
  decimation_hz: number;
  tick_rate_hz: number;
  preset: string;
}

export interface StateFrame {
  type: "state";
  seq: number;
  t: number;
  truth: { p: [number, number, number]; v: [number, number, number];
           q: [number, number, number, number]; landed: boolean };
  est: { x: number; y: number; z: number;
         vx: number; vy: number; vz: number; q: number[] };
  sp: { x: number; y: number; z: number; yaw: number;
        mode: string; cut: boolean };
  h_terr: number;
  thrust: number;
  fault: boolean;
}

export interface EventMsg {
  type: "event";
  seq: number;
  t: number;
  event: string;
}

export interface Ack {
  type: "ack";
  client_seq: number;
  applied: boolean;
  t?: number;
  clamped?: boolean;
  coalesced?: boolean;
  reason?: string;
}

export interface ErrorMsg {
  type: "error";
  error: string;
  client_seq?: number;
}

export interface Pong {
  type: "pong";
  t: number | null;
}

export type ServerMessage = Hello | StateFrame | EventMsg | Ack | ErrorMsg | Pong;

export interface IncrementCmd {
  type: "increment";
  dx?: number;
  dy?: number;
  dz?: number;
  dyaw?: number;
  client_seq: number;
}

export interface ModeCmd {
  type: "mode";
  mode: "terrain-relative" | "absolute-altitude";
  client_seq: number;
}

export interface ControlCmd {
  type: "start" | "stop" | "reset" | "ping";
}

export type ClientMessage = IncrementCmd | ModeCmd | ControlCmd;

const SERVER_TYPES = new Set(["hello", "state", "event", "ack", "error", "pong"]);

/** Parse one frame; null for anything that is not a known server message. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return obj as ServerMessage;
}
