/** Browser entry point: URL parameters pick the bridge endpoint
 * (`?endpoint=ws://127.0.0.1:8750` or `?host=…&port=…`), wires the
 * keyboard, gamepad polling, and the render loop. */

import { EMIT_INTERVAL_MS, OperatorConsole } from "./console.js";
import { KeyboardInput, pollGamepad } from "./input.js";
import { DEFAULT_SCENE, Renderer, Scene } from "./render.js";
import { Transport } from "./transport.js";

function endpointFromUrl(): string {
  const p = new URLSearchParams(location.search);
  const ep = p.get("endpoint");
  if (ep) return ep;
  const host = p.get("host") ?? "127.0.0.1";
  const port = p.get("port") ?? "8750";
  return `ws://${host}:${port}`;
}

function sceneFromUrl(): Scene {
  const p = new URLSearchParams(location.search);
  const scene: Scene = structuredClone(DEFAULT_SCENE);
  const fx = p.get("flower_x");
  if (fx !== null) scene.flower.x = Number(fx);
  if (p.get("bump") === "none") scene.bump = null;
  return scene;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function fmt(v: number, digits = 3): string {
  return v.toFixed(digits);
}

function main(): void {
  const endpoint = endpointFromUrl();
  const console_ = new OperatorConsole({
    now: () => performance.now(),
    send: msg => transport.send(msg),
  });
  const transport = new Transport(endpoint, console_,
    url => new WebSocket(url));
  const keyboard = new KeyboardInput(console_);
  keyboard.attach(window);

  const topCtx = el<HTMLCanvasElement>("top").getContext("2d")!;
  const sideCtx = el<HTMLCanvasElement>("side").getContext("2d")!;
  const renderer = new Renderer(topCtx, sideCtx, sceneFromUrl());

  const status = el<HTMLSpanElement>("status");
  const identity = el<HTMLSpanElement>("identity");
  const telemetry = el<HTMLSpanElement>("telemetry");
  const historyEl = el<HTMLUListElement>("history");
  el<HTMLSpanElement>("endpoint").textContent = endpoint;

  function describe(): string {
    switch (console_.status) {
      case "connected": {
        const h = console_.hello;
        return h ? `connected — ${h.role}` : "connected — awaiting hello";
      }
      case "incompatible": return `incompatible: ${console_.statusDetail}`;
      case "error": return `error: ${console_.statusDetail}`;
      case "closed": return `closed: ${console_.statusDetail}`;
      default: return console_.status;
    }
  }

  function renderHistory(): void {
    const rows = console_.history.slice(-12).reverse().map(r => {
      const deltas = r.kind === "mode"
        ? `mode → ${r.mode}`
        : ["dx", "dy", "dz", "dyaw"]
            .map((n, i) => [n, [r.dx, r.dy, r.dz, r.dyaw][i]!] as const)
            .filter(([, v]) => v !== 0)
            .map(([n, v]) => `${n} ${v > 0 ? "+" : ""}${fmt(v, 2)}`)
            .join(" ") || "(zero)";
      const badge = r.status === "pending" ? "…"
        : r.status === "applied" ? (r.clamped ? "applied ✂" : "applied")
        : `rejected: ${r.reason ?? "?"}`;
      const local = r.clampedLocal ? " (trimmed)" : "";
      return `<li class="${r.status}${r.clamped ? " clamped" : ""}">` +
        `#${r.clientSeq} ${deltas}${local} — ${badge}</li>`;
    });
    historyEl.innerHTML = rows.join("");
  }

  let lastHistoryLen = -1;
  function frame(): void {
    pollGamepad(console_, navigator.getGamepads ? navigator.getGamepads() : []);
    console_.tick();
    renderer.render(console_);

    status.textContent = describe();
    status.className = console_.status;
    const h = console_.hello;
    identity.textContent = h
      ? `${h.preset} · protocol ${h.protocol} · config ${h.config_hash.slice(0, 12)}…`
      : "";
    const f = console_.latest;
    telemetry.textContent = f
      ? `t=${fmt(f.t, 2)} s · ${fmt(console_.frameRateHz, 1)} Hz · ` +
        `pos (${fmt(f.truth.p[0])}, ${fmt(f.truth.p[1])}, ${fmt(f.truth.p[2])}) · ` +
        `sp (${fmt(f.sp.x)}, ${fmt(f.sp.y)}, ${fmt(f.sp.z)}) ${f.sp.mode}` +
        (console_.gapCount ? ` · ${console_.gapCount} dropped frames` : "")
      : "no telemetry";
    // history list only re-renders on change; acks mutate in place
    const sig = console_.history.length * 1000 +
      console_.history.filter(r => r.status !== "pending").length;
    if (sig !== lastHistoryLen) {
      renderHistory();
      lastHistoryLen = sig;
    }
    requestAnimationFrame(frame);
  }

  transport.connect();
  requestAnimationFrame(frame);

  // keep the emission window honest even when the tab is backgrounded
  // (rAF throttles, the command cap must not depend on it)
  setInterval(() => console_.tick(), EMIT_INTERVAL_MS / 5);
}

main();
