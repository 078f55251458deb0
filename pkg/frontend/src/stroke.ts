/** Convert a drag gesture into a demonstration payload for the service. */

import { CanvasMapping, pxToTask } from "./coords.js";

export interface StrokeSample {
  tMs: number;
  px: number;
  py: number;
}

export interface DemoSamples {
  t: number[];
  positions: number[][];
  velocities: number[][];
}

export interface DemoPayload {
  name: string;
  samples: DemoSamples;
}

/** Uniform-time resampling of the captured points to `count` samples. */
function resample(t: number[], pts: number[][], count: number): { t: number[]; pos: number[][] } {
  const t0 = t[0];
  const t1 = t[t.length - 1];
  const out: number[][] = [];
  const outT: number[] = [];
  let k = 0;
  for (let i = 0; i < count; i++) {
    const ti = t0 + ((t1 - t0) * i) / (count - 1);
    while (k + 1 < t.length - 1 && t[k + 1] <= ti) k++;
    const span = t[k + 1] - t[k];
    const w = span > 0 ? (ti - t[k]) / span : 0;
    out.push([
      pts[k][0] + w * (pts[k + 1][0] - pts[k][0]),
      pts[k][1] + w * (pts[k + 1][1] - pts[k][1]),
    ]);
    outT.push(ti);
  }
  return { t: outT, pos: out };
}

/** Central finite differences with one-sided endpoints. */
export function estimateVelocities(t: number[], pos: number[][]): number[][] {
  const n = t.length;
  const vel: number[][] = new Array(n);
  const diff = (a: number[], b: number[], dt: number) => [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt];
  vel[0] = diff(pos[1], pos[0], t[1] - t[0]);
  vel[n - 1] = diff(pos[n - 1], pos[n - 2], t[n - 1] - t[n - 2]);
  for (let i = 1; i < n - 1; i++) {
    vel[i] = diff(pos[i + 1], pos[i - 1], t[i + 1] - t[i - 1]);
  }
  return vel;
}

/**
 * Build the demonstration payload from raw pointer samples, or return null
 * when the stroke has fewer than 2 distinct points (caller shows a warning,
 * nothing is sent).
 */
export function strokeToDemo(
  samples: StrokeSample[],
  mapping: CanvasMapping,
  count = 100,
  name = "stroke",
): DemoPayload | null {
  // keep strictly increasing timestamps; identical-time samples collapse
  const t: number[] = [];
  const pts: number[][] = [];
  for (const s of samples) {
    const tSec = s.tMs / 1000;
    if (t.length > 0 && tSec <= t[t.length - 1]) continue;
    t.push(tSec);
    pts.push(pxToTask(mapping, s.px, s.py));
  }
  const distinct = new Set(pts.map((p) => `${p[0]},${p[1]}`)).size;
  if (t.length < 2 || distinct < 2) return null;
  if (count < 2) throw new Error(`resample count must be >= 2, got ${count}`);
  const r = resample(t, pts, count);
  return { name, samples: { t: r.t, positions: r.pos, velocities: estimateVelocities(r.t, r.pos) } };
}
