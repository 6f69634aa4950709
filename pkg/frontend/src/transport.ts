/** WebSocket transport: connects, feeds parsed frames to the console,
 * retries with backoff on refusal, and serializes outbound commands.
 * The socket constructor is injectable so tests can run over `ws` in
 * node or a scripted fake. */

import { OperatorConsole } from "./console.js";
import { ClientMessage, parseServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  // eslint-style `any` handlers: both the DOM WebSocket and `ws` must
  // be structurally assignable, and their event types differ
  onopen: ((ev: any) => unknown) | null;
  onmessage: ((ev: any) => unknown) | null;
  onclose: ((ev: any) => unknown) | null;
  onerror: ((ev: any) => unknown) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TransportOptions {
  retryDelayMs?: number;
  maxRetries?: number;                  // Infinity by default
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class Transport {
  private sock: SocketLike | null = null;
  private retries = 0;
  private closedByUs = false;

  constructor(
    private url: string,
    private console_: OperatorConsole,
    private factory: SocketFactory,
    private opts: TransportOptions = {},
  ) {}

  connect(): void {
    this.closedByUs = false;
    this.console_.onConnecting();
    this.open();
  }

  private open(): void {
    let sock: SocketLike;
    try {
      sock = this.factory(this.url);
    } catch (e) {
      this.onFailure(String(e));
      return;
    }
    this.sock = sock;
    sock.onopen = () => {
      this.retries = 0;
      this.console_.onOpen();
    };
    sock.onmessage = ev => {
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      const msg = parseServerMessage(text);
      if (msg) this.console_.handleServerMessage(msg);
    };
    sock.onerror = () => { /* the close that follows carries the retry */ };
    sock.onclose = () => {
      this.sock = null;
      if (!this.closedByUs) this.onFailure("connection lost");
    };
  }

  private onFailure(reason: string): void {
    const max = this.opts.maxRetries ?? Infinity;
    if (this.retries >= max) {
      this.console_.onTransportError(`${reason} (gave up)`);
      return;
    }
    this.retries += 1;
    const delay = this.opts.retryDelayMs ?? 1000;
    this.console_.onTransportError(`${reason} — retrying in ${delay} ms`);
    const later = this.opts.setTimeoutFn ?? setTimeout;
    later(() => {
      if (!this.closedByUs) {
        this.console_.onConnecting();
        this.open();
      }
    }, delay);
  }

  send = (msg: ClientMessage): void => {
    if (this.sock) this.sock.send(JSON.stringify(msg));
  };

  close(): void {
    this.closedByUs = true;
    this.sock?.close();
    this.sock = null;
    this.console_.onClose("disconnected");
  }
}
