import { describe, expect, it } from "vitest";
import { OperatorConsole } from "../src/console.js";
import { SocketLike, Transport } from "../src/transport.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev: any) => unknown) | null = null;
  onmessage: ((ev: any) => unknown) | null = null;
  onclose: ((ev: any) => unknown) | null = null;
  onerror: ((ev: any) => unknown) | null = null;
  send(data: string) { this.sent.push(data); }
  close() { this.closed = true; this.onclose?.({}); }
}

function makeConsole() {
  const c = new OperatorConsole({ now: () => 0, send: () => {} });
  return c;
}

describe("transport", () => {
  it("dispatches parsed frames and drops garbage", () => {
    const c = makeConsole();
    const sock = new FakeSocket();
    const tr = new Transport("ws://x", c, () => sock);
    tr.connect();
    sock.onopen!({});
    expect(c.status).toBe("connected");
    sock.onmessage!({ data: JSON.stringify({
      type: "hello", protocol: 1, role: "observer", config_hash: "h",
      decimation_hz: 30, tick_rate_hz: 480, preset: "p" }) });
    expect(c.role).toBe("observer");
    sock.onmessage!({ data: "complete garbage" });   // must not throw
    expect(c.role).toBe("observer");
  });

  it("retries a refused connection and surfaces the error state", async () => {
    const c = makeConsole();
    let attempts = 0;
    const socks: FakeSocket[] = [];
    const pending: (() => void)[] = [];
    const tr = new Transport("ws://x", c, () => {
      attempts += 1;
      if (attempts === 1) throw new Error("ECONNREFUSED");
      const s = new FakeSocket();
      socks.push(s);
      return s;
    }, { retryDelayMs: 1, setTimeoutFn: fn => pending.push(fn as () => void) });
    tr.connect();
    expect(c.status).toBe("error");
    expect(c.statusDetail).toMatch(/retrying/);
    pending.shift()!();                 // fire the scheduled retry
    expect(attempts).toBe(2);
    socks[0]!.onopen!({});
    expect(c.status).toBe("connected");
  });

  it("a deliberate close does not retry", () => {
    const c = makeConsole();
    let attempts = 0;
    const tr = new Transport("ws://x", c, () => {
      attempts += 1;
      return new FakeSocket();
    }, { retryDelayMs: 1, setTimeoutFn: fn => (fn as () => void)() });
    tr.connect();
    tr.close();
    expect(attempts).toBe(1);
    expect(c.status).toBe("closed");
  });

  it("serializes outbound client messages", () => {
    const c = makeConsole();
    const sock = new FakeSocket();
    const tr = new Transport("ws://x", c, () => sock);
    tr.connect();
    sock.onopen!({});
    tr.send({ type: "increment", dx: 0.05, client_seq: 1 });
    expect(JSON.parse(sock.sent[0]!)).toMatchObject(
      { type: "increment", dx: 0.05 });
  });
});
