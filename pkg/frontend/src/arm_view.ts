/**
 * Canvas arm rendering with draggable joint handles. Drags are converted to
 * world vectors through the documented view mapping and sent to the server;
 * the pseudo-inverse projection happens server-side only.
 */

import { frameOrigins, type Vec3 } from "./kinematics.js";
import type { DHRow } from "./protocol.js";
import { ViewConfig, dragToWorld, hitTestJoint, worldToScreen } from "./view.js";

export interface DragState {
  joint: number;
  startX: number;
  startY: number;
  lastVec: Vec3;
}

export class ArmView {
  private drag: DragState | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly view: ViewConfig,
    public dragGain = 0.01,
    public onDrag?: (joint: number, vec: Vec3, gain: number) => void,
    public onRelease?: () => void,
  ) {
    canvas.addEventListener("pointerdown", (ev) => this.pointerDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.pointerMove(ev));
    canvas.addEventListener("pointerup", () => this.pointerUp());
    canvas.addEventListener("pointerleave", () => this.pointerUp());
  }

  private origins: Vec3[] = [];

  private canvasPoint(ev: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  }

  private pointerDown(ev: PointerEvent): void {
    const [px, py] = this.canvasPoint(ev);
    const joint = hitTestJoint(this.view, this.origins, px, py);
    if (joint !== null) {
      this.drag = { joint, startX: px, startY: py, lastVec: [0, 0, 0] };
      this.canvas.setPointerCapture(ev.pointerId);
    }
  }

  private pointerMove(ev: PointerEvent): void {
    if (!this.drag) return;
    const [px, py] = this.canvasPoint(ev);
    const vec = dragToWorld(this.view, px - this.drag.startX, py - this.drag.startY);
    this.drag.lastVec = vec;
    this.onDrag?.(this.drag.joint, vec, this.dragGain);
  }

  private pointerUp(): void {
    if (!this.drag) return;
    this.drag = null;
    this.onRelease?.();
  }

  get activeDragJoint(): number | null {
    return this.drag ? this.drag.joint : null;
  }

  render(dh: DHRow[], q: number[], stale: boolean): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    this.origins = frameOrigins(dh, q);
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.globalAlpha = stale ? 0.35 : 1.0;

    // ground line through the world origin
    ctx.strokeStyle = "#444";
    ctx.lineWidth = 1;
    const [gx, gy] = worldToScreen(this.view, [0, 0, 0]);
    ctx.beginPath();
    ctx.moveTo(0, gy);
    ctx.lineTo(width, gy);
    ctx.stroke();

    // links
    ctx.strokeStyle = stale ? "#8a8a8a" : "#58a6ff";
    ctx.lineWidth = 5;
    ctx.lineCap = "round";
    ctx.beginPath();
    const pts = this.origins.map((p) => worldToScreen(this.view, p));
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0], pts[i][1]);
    ctx.stroke();

    // joint handles
    for (let i = 1; i < pts.length; i++) {
      const grabbed = this.drag?.joint === i;
      ctx.fillStyle = grabbed ? "#f0883e" : stale ? "#666" : "#d29922";
      ctx.beginPath();
      ctx.arc(pts[i][0], pts[i][1], grabbed ? 9 : 6, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillStyle = "#ccc";
      ctx.font = "11px sans-serif";
      ctx.fillText(String(i), pts[i][0] + 8, pts[i][1] - 8);
    }
    ctx.globalAlpha = 1.0;
  }
}
