/**
 * Client-side forward kinematics for rendering only: the arm is redrawn from
 * each state message's joint vector using the robot description sent at
 * connect. The simulation itself stays server-authoritative.
 *
 * Standard DH per row: Rz(q + theta) Tz(d) Tx(a) Rx(alpha).
 */

import type { DHRow } from "./protocol.js";

export type Vec3 = [number, number, number];
type Mat3 = [Vec3, Vec3, Vec3];

const matMul = (A: Mat3, B: Mat3): Mat3 => {
  const C: Mat3 = [[0, 0, 0], [0, 0, 0], [0, 0, 0]];
  for (let i = 0; i < 3; i++)
    for (let j = 0; j < 3; j++)
      C[i][j] = A[i][0] * B[0][j] + A[i][1] * B[1][j] + A[i][2] * B[2][j];
  return C;
};

const matVec = (A: Mat3, v: Vec3): Vec3 => [
  A[0][0] * v[0] + A[0][1] * v[1] + A[0][2] * v[2],
  A[1][0] * v[0] + A[1][1] * v[1] + A[1][2] * v[2],
  A[2][0] * v[0] + A[2][1] * v[1] + A[2][2] * v[2],
];

/** Frame origins 0..n (base first), for drawing link segments and handles. */
export function frameOrigins(dh: DHRow[], q: number[]): Vec3[] {
  if (dh.length !== q.length) {
    throw new Error(`robot has ${dh.length} joints, state carries ${q.length}`);
  }
  const origins: Vec3[] = [[0, 0, 0]];
  let R: Mat3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
  let p: Vec3 = [0, 0, 0];
  for (let i = 0; i < dh.length; i++) {
    const { a, alpha, d, theta } = dh[i];
    const ct = Math.cos(q[i] + theta);
    const st = Math.sin(q[i] + theta);
    const ca = Math.cos(alpha);
    const sa = Math.sin(alpha);
    const Rloc: Mat3 = [
      [ct, -st * ca, st * sa],
      [st, ct * ca, -ct * sa],
      [0, sa, ca],
    ];
    const tLoc: Vec3 = [a * ct, a * st, d];
    const step = matVec(R, tLoc);
    p = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
    R = matMul(R, Rloc);
    origins.push(p);
  }
  return origins;
}

/** Feature point: tip origin plus the offset expressed in the tip frame. */
export function featurePoint(dh: DHRow[], q: number[], offset: Vec3): Vec3 {
  let R: Mat3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
  let p: Vec3 = [0, 0, 0];
  for (let i = 0; i < dh.length; i++) {
    const { a, alpha, d, theta } = dh[i];
    const ct = Math.cos(q[i] + theta);
    const st = Math.sin(q[i] + theta);
    const ca = Math.cos(alpha);
    const sa = Math.sin(alpha);
    const step = matVec(R, [a * ct, a * st, d]);
    p = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
    R = matMul(R, [
      [ct, -st * ca, st * sa],
      [st, ct * ca, -ct * sa],
      [0, sa, ca],
    ]);
  }
  const off = matVec(R, offset);
  return [p[0] + off[0], p[1] + off[1], p[2] + off[2]];
}
