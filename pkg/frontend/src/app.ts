/**
 * Session store: the single source of client-side truth. It keeps only
 * server-authoritative state (the UI never integrates anything locally) plus
 * the intent currently being composed. State older than STALE_AFTER_MS greys
 * the view; a disconnect zeroes the composed intent as well.
 */

import type { HelloMessage, StateMessage } from "./protocol.js";

export const STALE_AFTER_MS = 1000;

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface TrailStats {
  count: number;
  meanRadius: number;
  maxRadiusDev: number;
  center: [number, number];
}

export class SessionStore {
  hello: HelloMessage | null = null;
  latest: StateMessage | null = null;
  lastStateAtMs = 0;
  status: ConnectionStatus = "connecting";
  sliderValues: number[] = [];
  trail: Array<[number, number]> = [];
  trailLimit = 600;
  history: Array<{ t: number; e: number; zHat: number; zTrue: number; V: number }> = [];
  historyLimit = 2000;

  onHello(msg: HelloMessage): void {
    this.hello = msg;
    this.status = "connected";
    this.sliderValues = new Array(msg.robot.n).fill(0);
  }

  onState(msg: StateMessage, nowMs: number): void {
    this.latest = msg;
    this.lastStateAtMs = nowMs;
    this.trail.push([msg.x[0], msg.x[1]]);
    if (this.trail.length > this.trailLimit) this.trail.shift();
    this.history.push({
      t: msg.t,
      e: Math.hypot(msg.e[0], msg.e[1]),
      zHat: msg.z_hat,
      zTrue: msg.z_true,
      V: msg.V,
    });
    if (this.history.length > this.historyLimit) this.history.shift();
  }

  onDisconnect(): void {
    this.status = "closed";
    this.sliderValues = this.sliderValues.map(() => 0);
  }

  isStale(nowMs: number): boolean {
    if (this.status !== "connected") return true;
    return this.latest === null || nowMs - this.lastStateAtMs > STALE_AFTER_MS;
  }

  setSlider(index: number, value: number, bound: number): number {
    const clamped = Math.max(-bound, Math.min(bound, value));
    this.sliderValues[index] = clamped;
    return clamped;
  }

  releaseSliders(): void {
    this.sliderValues = this.sliderValues.map(() => 0);
  }

  composedIntent(): number[] {
    return [...this.sliderValues];
  }

  hasNonzeroIntent(): boolean {
    return this.sliderValues.some((v) => v !== 0);
  }

  trailStats(): TrailStats | null {
    if (this.trail.length < 8) return null;
    let cx = 0;
    let cy = 0;
    for (const [x, y] of this.trail) {
      cx += x;
      cy += y;
    }
    cx /= this.trail.length;
    cy /= this.trail.length;
    let mean = 0;
    const radii = this.trail.map(([x, y]) => Math.hypot(x - cx, y - cy));
    for (const r of radii) mean += r;
    mean /= radii.length;
    let maxDev = 0;
    for (const r of radii) maxDev = Math.max(maxDev, Math.abs(r - mean));
    return { count: this.trail.length, meanRadius: mean, maxRadiusDev: maxDev,
             center: [cx, cy] };
  }
}
