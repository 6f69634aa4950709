/** Dual-pane 2D scene: top-down (x–y) and side (x–z) views with the
 * terrain profile, obstacle, flower, truth/estimate trails, and the
 * current setpoint.  Only telemetry actually received is drawn; the
 * terrain profile accumulates from the streamed under-vehicle samples.
 */

import { OperatorConsole, TrailPoint } from "./console.js";

/** Static scene overlays (the streamed telemetry carries no geometry);
 * defaults match the scripted-course presets. */
export interface Scene {
  flower: { x: number; y: number; radius: number; stem: number };
  bump: { x: number; y: number; radius: number; peak: number } | null;
}

export const DEFAULT_SCENE: Scene = {
  flower: { x: 0.80, y: 0.0, radius: 0.05, stem: 0.04 },
  bump: { x: 0.35, y: 0.0, radius: 0.15, peak: 0.06 },
};

/** The context subset the renderer touches (stubbed in tests). */
export interface Ctx2D {
  canvas: { width: number; height: number };
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(s: string, x: number, y: number): void;
}

interface Viewport {
  x0: number; x1: number;               // world x range
  v0: number; v1: number;               // world range on the vertical pane axis
}

const TOP: Viewport = { x0: -0.25, x1: 1.15, v0: -0.45, v1: 0.45 };
const SIDE: Viewport = { x0: -0.25, x1: 1.15, v0: -0.03, v1: 0.42 };

export class Renderer {
  constructor(
    private top: Ctx2D,
    private side: Ctx2D,
    public scene: Scene = DEFAULT_SCENE,
  ) {}

  render(c: OperatorConsole): void {
    this.pane(this.top, TOP, c, p => p.y, true);
    this.pane(this.side, SIDE, c, p => p.z, false);
  }

  private sx(ctx: Ctx2D, vp: Viewport, x: number): number {
    return ((x - vp.x0) / (vp.x1 - vp.x0)) * ctx.canvas.width;
  }

  private sy(ctx: Ctx2D, vp: Viewport, v: number): number {
    return ctx.canvas.height -
      ((v - vp.v0) / (vp.v1 - vp.v0)) * ctx.canvas.height;
  }

  private pane(ctx: Ctx2D, vp: Viewport, c: OperatorConsole,
               vert: (p: TrailPoint) => number, topDown: boolean): void {
    const { width, height } = ctx.canvas;
    ctx.globalAlpha = 1;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);

    if (topDown) this.sceneTop(ctx, vp);
    else this.sceneSide(ctx, vp, c);

    this.trail(ctx, vp, c.trailTruth, vert, "#7dd3a0");
    this.trail(ctx, vp, c.trailEst, vert, "#e0b35a");

    const f = c.latest;
    if (f) {
      const sp = f.sp;
      const spV = topDown ? sp.y : sp.z + this.spGround(c);
      this.cross(ctx, this.sx(ctx, vp, sp.x), this.sy(ctx, vp, spV),
                 "#6ea8fe");
      this.dot(ctx, this.sx(ctx, vp, f.truth.p[0]),
               this.sy(ctx, vp, topDown ? f.truth.p[1] : f.truth.p[2]),
               4, "#7dd3a0");
      this.dot(ctx, this.sx(ctx, vp, f.est.x),
               this.sy(ctx, vp, topDown ? f.est.y : f.est.z),
               3, "#e0b35a");
    }

    ctx.font = "12px system-ui, sans-serif";
    ctx.fillStyle = "#9aa4b2";
    ctx.fillText(topDown ? "top view (x–y)" : "side view (x–z)", 8, 16);
    if (c.stale) this.banner(ctx, "STALE TELEMETRY", "#e05a5a");
    else if (c.fault) this.banner(ctx, "CONTROLLER FAULT", "#e05a5a");
    else if (c.landed && !topDown) this.banner(ctx, "LANDED", "#7dd3a0");
  }

  /** Side-view setpoint height: terrain-relative setpoints ride on the
   * last streamed ground sample, absolute ones stand alone. */
  private spGround(c: OperatorConsole): number {
    if (!c.latest || c.latest.sp.mode !== "terrain-relative") return 0;
    return c.latest.h_terr;
  }

  private sceneTop(ctx: Ctx2D, vp: Viewport): void {
    const { bump, flower } = this.scene;
    if (bump) {
      ctx.beginPath();
      ctx.arc(this.sx(ctx, vp, bump.x), this.sy(ctx, vp, bump.y),
              (bump.radius / (vp.x1 - vp.x0)) * ctx.canvas.width, 0,
              2 * Math.PI);
      ctx.strokeStyle = "#5b5347";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(this.sx(ctx, vp, flower.x), this.sy(ctx, vp, flower.y),
            (flower.radius / (vp.x1 - vp.x0)) * ctx.canvas.width, 0,
            2 * Math.PI);
    ctx.fillStyle = "#b06cc4";
    ctx.globalAlpha = 0.5;
    ctx.fill();
    ctx.globalAlpha = 1;
  }

  private sceneSide(ctx: Ctx2D, vp: Viewport, c: OperatorConsole): void {
    // streamed terrain profile under the flown path
    const pts = [...c.terrainSamples].sort((a, b) => a.x - b.x);
    if (pts.length > 1) {
      ctx.beginPath();
      ctx.moveTo(this.sx(ctx, vp, pts[0]!.x), this.sy(ctx, vp, pts[0]!.h));
      for (const p of pts) {
        ctx.lineTo(this.sx(ctx, vp, p.x), this.sy(ctx, vp, p.h));
      }
      ctx.strokeStyle = "#5b5347";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
    // flower silhouette: stem plus landing disk
    const { flower } = this.scene;
    const fx = this.sx(ctx, vp, flower.x);
    ctx.beginPath();
    ctx.moveTo(fx, this.sy(ctx, vp, 0));
    ctx.lineTo(fx, this.sy(ctx, vp, flower.stem));
    ctx.strokeStyle = "#b06cc4";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(this.sx(ctx, vp, flower.x - flower.radius),
               this.sy(ctx, vp, flower.stem));
    ctx.lineTo(this.sx(ctx, vp, flower.x + flower.radius),
               this.sy(ctx, vp, flower.stem));
    ctx.stroke();
    // ground line
    ctx.beginPath();
    ctx.moveTo(this.sx(ctx, vp, vp.x0), this.sy(ctx, vp, 0));
    ctx.lineTo(this.sx(ctx, vp, vp.x1), this.sy(ctx, vp, 0));
    ctx.strokeStyle = "#2a2f3a";
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  private trail(ctx: Ctx2D, vp: Viewport, trail: TrailPoint[],
                vert: (p: TrailPoint) => number, color: string): void {
    if (trail.length < 2) return;
    ctx.beginPath();
    ctx.moveTo(this.sx(ctx, vp, trail[0]!.x),
               this.sy(ctx, vp, vert(trail[0]!)));
    for (const p of trail) {
      ctx.lineTo(this.sx(ctx, vp, p.x), this.sy(ctx, vp, vert(p)));
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = 1;
    ctx.globalAlpha = 0.7;
    ctx.stroke();
    ctx.globalAlpha = 1;
  }

  private dot(ctx: Ctx2D, x: number, y: number, r: number,
              color: string): void {
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    ctx.fillStyle = color;
    ctx.fill();
  }

  private cross(ctx: Ctx2D, x: number, y: number, color: string): void {
    ctx.beginPath();
    ctx.moveTo(x - 6, y);
    ctx.lineTo(x + 6, y);
    ctx.moveTo(x, y - 6);
    ctx.lineTo(x, y + 6);
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  private banner(ctx: Ctx2D, text: string, color: string): void {
    ctx.font = "bold 18px system-ui, sans-serif";
    ctx.fillStyle = color;
    ctx.fillText(text, ctx.canvas.width / 2 - 60, 30);
  }
}
