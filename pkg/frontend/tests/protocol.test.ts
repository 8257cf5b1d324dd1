import { describe, expect, it } from "vitest";

import {
  MessageComposer,
  isHelloMessage,
  isStateMessage,
  parseServerMessage,
} from "../src/protocol.js";

const validState = {
  type: "state",
  session_id: "abc",
  seq: 3,
  t: 0.5,
  step: 15,
  q: [0, 0, 0, 0, 0, 0],
  x: [100, 200],
  x_d: [720, 540],
  e: [-620, -340],
  d: [0, 0, 0, 0, 0, 0],
  u: [0, 0, 0, 0, 0, 0],
  u_N: [0, 0, 0, 0, 0, 0],
  z_hat: 2.5,
  z_true: 3.0,
  V: 1234.5,
  null_residual: 1e-15,
  flags: { depth_clamped: false, jac_damped: false, img_damped: false },
  paused: false,
};

describe("message guards", () => {
  it("accepts a valid state message", () => {
    expect(isStateMessage(validState)).toBe(true);
  });

  it("rejects wrong pixel arity", () => {
    expect(isStateMessage({ ...validState, x: [1, 2, 3] })).toBe(false);
  });

  it("rejects non-finite entries", () => {
    expect(isStateMessage({ ...validState, q: [0, NaN, 0, 0, 0, 0] })).toBe(false);
  });

  it("rejects missing flags", () => {
    const { flags: _flags, ...rest } = validState;
    expect(isStateMessage(rest)).toBe(false);
  });

  it("accepts a hello ack", () => {
    const hello = {
      type: "ack",
      action: "hello",
      session_id: "abc",
      seq: 1,
      robot: { n: 6, dh: [], feature_offset: [0, 0, 0], name: "ur5" },
      image_size: [1440, 1080],
      dt: 1 / 30,
      target: { type: "setpoint" },
      scenario: "task1",
    };
    expect(isHelloMessage(hello)).toBe(true);
  });

  it("parse returns null for junk", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "warp" }))).toBeNull();
  });

  it("parse keeps state and error messages", () => {
    expect(parseServerMessage(JSON.stringify(validState))?.type).toBe("state");
    const err = { type: "error", session_id: "abc", seq: 9, message: "nope" };
    expect(parseServerMessage(JSON.stringify(err))?.type).toBe("error");
  });
});

describe("message composer", () => {
  it("all-zero sliders compose a zero intent", () => {
    const composer = new MessageComposer("sid");
    const msg = composer.sliderIntent([0, 0, 0, 0, 0, 0]);
    expect(msg).toMatchObject({
      type: "intent",
      mode: "slider",
      session_id: "sid",
      d: [0, 0, 0, 0, 0, 0],
    });
  });

  it("single raised slider lands in the right slot", () => {
    const composer = new MessageComposer("sid");
    const msg = composer.sliderIntent([0, 0, 0.5, 0, 0, 0]);
    expect(msg.d).toEqual([0, 0, 0.5, 0, 0, 0]);
  });

  it("drag intent carries joint, world vector, and gain", () => {
    const composer = new MessageComposer("sid");
    const msg = composer.dragIntent(3, [0, 0.4, 0], 0.01);
    expect(msg).toMatchObject({
      type: "intent",
      mode: "cartesian_drag",
      joint: 3,
      vec: [0, 0.4, 0],
      gain: 0.01,
    });
  });

  it("sequence numbers are strictly monotone", () => {
    const composer = new MessageComposer("sid");
    const seqs = [
      composer.sliderIntent([0]).seq,
      composer.command("pause").seq,
      composer.setTarget([700, 500]).seq,
      composer.zeroIntent(6).seq,
    ] as number[];
    for (let i = 1; i < seqs.length; i++) expect(seqs[i]).toBe(seqs[i - 1] + 1);
  });

  it("set_target carries the pixel pair", () => {
    const composer = new MessageComposer("sid");
    expect(composer.setTarget([700, 500])).toMatchObject({
      type: "command",
      action: "set_target",
      target: [700, 500],
    });
  });
});
