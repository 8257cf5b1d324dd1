/**
 * Virtual camera pane: the feature pixel, the current target, and a fading
 * trail of recent feature positions, all in image coordinates scaled to the
 * canvas.
 */

import type { StateMessage } from "./protocol.js";

export class CameraView {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private imageSize: [number, number] = [1440, 1080],
  ) {}

  setImageSize(size: [number, number]): void {
    this.imageSize = size;
  }

  private toCanvas(p: [number, number]): [number, number] {
    return [
      (p[0] / this.imageSize[0]) * this.canvas.width,
      (p[1] / this.imageSize[1]) * this.canvas.height,
    ];
  }

  render(state: StateMessage | null, trail: Array<[number, number]>, stale: boolean): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.globalAlpha = stale ? 0.35 : 1.0;
    ctx.strokeStyle = "#333";
    ctx.strokeRect(0, 0, width, height);

    if (trail.length > 1) {
      ctx.strokeStyle = "#2ea04366";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      const [x0, y0] = this.toCanvas(trail[0]);
      ctx.moveTo(x0, y0);
      for (const p of trail.slice(1)) {
        const [cx, cy] = this.toCanvas(p);
        ctx.lineTo(cx, cy);
      }
      ctx.stroke();
    }
    if (state) {
      const [tx, ty] = this.toCanvas(state.x_d);
      ctx.strokeStyle = "#f85149";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(tx - 7, ty);
      ctx.lineTo(tx + 7, ty);
      ctx.moveTo(tx, ty - 7);
      ctx.lineTo(tx, ty + 7);
      ctx.stroke();

      const [fx, fy] = this.toCanvas(state.x);
      ctx.fillStyle = "#58a6ff";
      ctx.beginPath();
      ctx.arc(fx, fy, 5, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.globalAlpha = 1.0;
  }
}
