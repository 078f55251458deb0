/** Canvas rendering: arrow geometry is computed by pure helpers so it can
 * be tested without a DOM; the draw functions are thin wrappers.
 */

import { FieldGrid, TrajectoryResponse } from "./api.js";
import { CanvasMapping, taskToPx } from "./coords.js";

export interface Arrow {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  headLeft: [number, number];
  headRight: [number, number];
  speed: number;
}

/** Grid points in row-major order reconstructed from bounds + resolution. */
export function gridPoints(grid: FieldGrid): number[][] {
  const [rx, ry] = grid.resolution;
  const [bx, by] = grid.bounds;
  const pts: number[][] = [];
  for (let i = 0; i < rx; i++) {
    const x = bx[0] + ((bx[1] - bx[0]) * i) / (rx - 1);
    for (let j = 0; j < ry; j++) {
      const y = by[0] + ((by[1] - by[0]) * j) / (ry - 1);
      pts.push([x, y]);
    }
  }
  return pts;
}

/** One arrow per grid point, length normalized to the pixel cell size. */
export function fieldArrows(grid: FieldGrid, mapping: CanvasMapping, cellPx: number): Arrow[] {
  const pts = gridPoints(grid);
  let vmax = 0;
  for (const v of grid.vectors) {
    vmax = Math.max(vmax, Math.hypot(v[0], v[1]));
  }
  const arrows: Arrow[] = [];
  for (let k = 0; k < pts.length; k++) {
    const [x0, y0] = taskToPx(mapping, pts[k][0], pts[k][1]);
    const speed = Math.hypot(grid.vectors[k][0], grid.vectors[k][1]);
    if (vmax === 0 || speed === 0) {
      arrows.push({ x0, y0, x1: x0, y1: y0, headLeft: [x0, y0], headRight: [x0, y0], speed });
      continue;
    }
    const len = (0.8 * cellPx * speed) / vmax;
    // canvas y grows downward, task y upward
    const ux = grid.vectors[k][0] / speed;
    const uy = -grid.vectors[k][1] / speed;
    const x1 = x0 + len * ux;
    const y1 = y0 + len * uy;
    const hx = -0.3 * len;
    const hy = 0.18 * len;
    arrows.push({
      x0,
      y0,
      x1,
      y1,
      headLeft: [x1 + hx * ux - hy * uy, y1 + hx * uy + hy * ux],
      headRight: [x1 + hx * ux + hy * uy, y1 + hx * uy - hy * ux],
      speed,
    });
  }
  return arrows;
}

export function pathToPx(points: number[][], mapping: CanvasMapping): [number, number][] {
  return points.map((p) => taskToPx(mapping, p[0], p[1]));
}

export function drawField(ctx: CanvasRenderingContext2D, arrows: Arrow[], stale: boolean): void {
  ctx.strokeStyle = stale ? "#b9b9c9" : "#4668b0";
  ctx.lineWidth = 1;
  for (const a of arrows) {
    ctx.beginPath();
    ctx.moveTo(a.x0, a.y0);
    ctx.lineTo(a.x1, a.y1);
    ctx.moveTo(a.headLeft[0], a.headLeft[1]);
    ctx.lineTo(a.x1, a.y1);
    ctx.lineTo(a.headRight[0], a.headRight[1]);
    ctx.stroke();
  }
}

export function drawPath(
  ctx: CanvasRenderingContext2D,
  pts: [number, number][],
  color: string,
  width = 2,
): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
  ctx.stroke();
}

export function drawMarker(
  ctx: CanvasRenderingContext2D,
  mapping: CanvasMapping,
  point: number[],
  color: string,
  radius = 6,
): void {
  const [px, py] = taskToPx(mapping, point[0], point[1]);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(px, py, radius, 0, 2 * Math.PI);
  ctx.fill();
}

/** Stall spans: consecutive samples with tiny speed away from the goal. */
export function stallSpans(
  traj: TrajectoryResponse,
  goal: number[],
  speedEps: number,
  goalTol: number,
): { from: number; to: number; center: number[] }[] {
  const stalled = traj.t.map((_, k) => {
    const speed = Math.hypot(traj.xdot[k][0], traj.xdot[k][1]);
    const dist = Math.hypot(traj.x[k][0] - goal[0], traj.x[k][1] - goal[1]);
    return speed < speedEps && dist > goalTol;
  });
  const spans: { from: number; to: number; center: number[] }[] = [];
  let k = 0;
  while (k < stalled.length) {
    if (!stalled[k]) {
      k++;
      continue;
    }
    let j = k;
    let cx = 0;
    let cy = 0;
    while (j < stalled.length && stalled[j]) {
      cx += traj.x[j][0];
      cy += traj.x[j][1];
      j++;
    }
    spans.push({ from: traj.t[k], to: traj.t[j - 1], center: [cx / (j - k), cy / (j - k)] });
    k = j;
  }
  return spans;
}
