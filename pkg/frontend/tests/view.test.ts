import { describe, expect, it } from "vitest";

import { defaultView, dragToWorld, hitTestJoint, worldToScreen } from "../src/view.js";

describe("world/screen mapping", () => {
  it("maps the world origin to the configured anchor", () => {
    const view = defaultView(460, 400);
    expect(worldToScreen(view, [0, 0, 0])).toEqual(view.originPx);
  });

  it("screen up is world up (canvas y flipped)", () => {
    const view = defaultView(460, 400);
    const [, yLow] = worldToScreen(view, [0, 0.5, 0]);
    const [, yBase] = worldToScreen(view, [0, 0, 0]);
    expect(yLow).toBeLessThan(yBase);
  });

  it("a 40 px upward drag converts to 0.4 m along the view's up axis", () => {
    // documented scale: 0.01 m per screen pixel
    const view = defaultView(460, 400);
    const vec = dragToWorld(view, 0, -40); // canvas dy negative = upward
    expect(vec[0]).toBeCloseTo(0, 12);
    expect(vec[1]).toBeCloseTo(0.4, 12);
    expect(vec[2]).toBeCloseTo(0, 12);
  });

  it("composes the documented drag message for the UR5 side view", () => {
    const view = defaultView(460, 400, [1, 0, 0], [0, 0, 1]);
    const vec = dragToWorld(view, 0, -40);
    expect(vec).toEqual([0, 0, 0.4]);
  });

  it("round-trips drags through the projection", () => {
    const view = defaultView(460, 400);
    const [x0, y0] = worldToScreen(view, [0, 0, 0]);
    const [x1, y1] = worldToScreen(view, [0.25, 0.1, 0]);
    const vec = dragToWorld(view, x1 - x0, y1 - y0);
    expect(vec[0]).toBeCloseTo(0.25, 12);
    expect(vec[1]).toBeCloseTo(0.1, 12);
  });
});

describe("joint hit testing", () => {
  const view = defaultView(460, 400);
  const origins: Array<[number, number, number]> = [
    [0, 0, 0],
    [1, 0, 0],
    [2, 0, 0],
  ];

  it("finds the joint under the pointer", () => {
    const [px, py] = worldToScreen(view, [1, 0, 0]);
    expect(hitTestJoint(view, origins, px + 3, py - 3)).toBe(1);
  });

  it("misses when far from every handle", () => {
    expect(hitTestJoint(view, origins, 5, 5)).toBeNull();
  });

  it("never returns the base frame", () => {
    const [px, py] = worldToScreen(view, [0, 0, 0]);
    const hit = hitTestJoint(view, origins, px, py);
    expect(hit === null || hit >= 1).toBe(true);
  });
});
