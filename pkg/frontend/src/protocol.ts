/**
 * Wire protocol for the session service: typed messages, runtime guards for
 * inbound JSON, and composers that stamp session_id plus a monotone seq.
 */

export interface DHRow {
  a: number;
  alpha: number;
  d: number;
  theta: number;
}

export interface RobotDescription {
  n: number;
  dh: DHRow[];
  feature_offset: [number, number, number];
  name: string;
}

export interface StateFlags {
  depth_clamped: boolean;
  jac_damped: boolean;
  img_damped: boolean;
}

export interface StateMessage {
  type: "state";
  session_id: string;
  seq: number;
  t: number;
  step: number;
  q: number[];
  x: [number, number];
  x_d: [number, number];
  e: [number, number];
  d: number[];
  u: number[];
  u_N: number[];
  z_hat: number;
  z_true: number;
  V: number;
  null_residual: number;
  flags: StateFlags;
  paused: boolean;
}

export interface HelloMessage {
  type: "ack";
  action: "hello";
  session_id: string;
  seq: number;
  robot: RobotDescription;
  image_size: [number, number];
  dt: number;
  target: Record<string, unknown>;
  scenario: string;
}

export interface AckMessage {
  type: "ack";
  session_id: string;
  seq: number;
  action: string;
  ok?: boolean;
}

export interface ErrorMessage {
  type: "error";
  session_id: string;
  seq: number;
  message: string;
}

export type ServerMessage = StateMessage | HelloMessage | AckMessage | ErrorMessage;

const isNumberArray = (v: unknown, len?: number): v is number[] =>
  Array.isArray(v) && (len === undefined || v.length === len) &&
  v.every((x) => typeof x === "number" && Number.isFinite(x));

export function isStateMessage(msg: unknown): msg is StateMessage {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  return (
    m.type === "state" &&
    typeof m.session_id === "string" &&
    typeof m.seq === "number" &&
    typeof m.t === "number" &&
    isNumberArray(m.q) &&
    isNumberArray(m.x, 2) &&
    isNumberArray(m.x_d, 2) &&
    isNumberArray(m.e, 2) &&
    isNumberArray(m.d) &&
    typeof m.z_hat === "number" &&
    typeof m.z_true === "number" &&
    typeof m.V === "number" &&
    typeof m.flags === "object" && m.flags !== null
  );
}

export function isHelloMessage(msg: unknown): msg is HelloMessage {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  if (m.type !== "ack" || m.action !== "hello") return false;
  const robot = m.robot as Record<string, unknown> | undefined;
  return (
    typeof m.session_id === "string" &&
    robot !== undefined &&
    typeof robot.n === "number" &&
    Array.isArray(robot.dh) &&
    isNumberArray(m.image_size, 2) &&
    typeof m.dt === "number"
  );
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as Record<string, unknown>).type;
  if (type === "state" && isStateMessage(data)) return data;
  if (type === "ack" || type === "error") return data as ServerMessage;
  return null;
}

/** Stamps outbound messages with the session id and a monotone sequence. */
export class MessageComposer {
  private seq = 0;

  constructor(readonly sessionId: string) {}

  private stamp(body: Record<string, unknown>): Record<string, unknown> {
    this.seq += 1;
    return { session_id: this.sessionId, seq: this.seq, ...body };
  }

  sliderIntent(d: number[]): Record<string, unknown> {
    return this.stamp({ type: "intent", mode: "slider", d });
  }

  zeroIntent(n: number): Record<string, unknown> {
    return this.sliderIntent(new Array(n).fill(0));
  }

  dragIntent(joint: number, vec: [number, number, number], gain: number) {
    return this.stamp({ type: "intent", mode: "cartesian_drag", joint, vec, gain });
  }

  command(action: "pause" | "resume" | "reset"): Record<string, unknown> {
    return this.stamp({ type: "command", action });
  }

  setTarget(target: [number, number]): Record<string, unknown> {
    return this.stamp({ type: "command", action: "set_target", target });
  }
}
