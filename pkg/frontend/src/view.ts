/**
 * Orthographic world<->screen mapping for the arm pane.
 *
 * Documented scale: METERS_PER_PIXEL world meters per screen pixel (0.01 by
 * default, i.e. 100 px per meter). Screen x grows along `rightAxis`, screen y
 * grows *upward* along `upAxis` (canvas y is flipped at draw time). Drag
 * deltas therefore convert as world = (dx * right + dy_up * up) * scale.
 */

import type { Vec3 } from "./kinematics.js";

export const METERS_PER_PIXEL = 0.01;

export interface ViewConfig {
  rightAxis: Vec3;
  upAxis: Vec3;
  metersPerPixel: number;
  originPx: [number, number]; // where the world origin lands on the canvas
}

export const defaultView = (
  width: number,
  height: number,
  rightAxis: Vec3 = [1, 0, 0],
  upAxis: Vec3 = [0, 1, 0],
): ViewConfig => ({
  rightAxis,
  upAxis,
  metersPerPixel: METERS_PER_PIXEL,
  originPx: [width / 2, height * 0.72],
});

const dot = (a: Vec3, b: Vec3) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

/** World point -> canvas pixel (canvas y points down). */
export function worldToScreen(view: ViewConfig, p: Vec3): [number, number] {
  const sx = dot(p, view.rightAxis) / view.metersPerPixel;
  const sy = dot(p, view.upAxis) / view.metersPerPixel;
  return [view.originPx[0] + sx, view.originPx[1] - sy];
}

/**
 * Screen-pixel drag delta -> world displacement vector.
 * dyPx is in canvas coordinates (positive = downward on screen).
 */
export function dragToWorld(view: ViewConfig, dxPx: number, dyPx: number): Vec3 {
  const rx = view.rightAxis;
  const up = view.upAxis;
  const sx = dxPx * view.metersPerPixel;
  const sy = -dyPx * view.metersPerPixel; // canvas y down -> world up positive
  return [
    sx * rx[0] + sy * up[0],
    sx * rx[1] + sy * up[1],
    sx * rx[2] + sy * up[2],
  ];
}

/** Nearest joint handle within `radiusPx` of a canvas point, or null. */
export function hitTestJoint(
  view: ViewConfig,
  origins: Vec3[],
  px: number,
  py: number,
  radiusPx = 14,
): number | null {
  let best: number | null = null;
  let bestDist = radiusPx;
  // origins[0] is the base; joint i handle sits at origins[i-1] (its axis),
  // but dragging is more intuitive on the *link end*, origins[i]
  for (let i = 1; i < origins.length; i++) {
    const [sx, sy] = worldToScreen(view, origins[i]);
    const dist = Math.hypot(px - sx, py - sy);
    if (dist <= bestDist) {
      best = i;
      bestDist = dist;
    }
  }
  return best;
}
