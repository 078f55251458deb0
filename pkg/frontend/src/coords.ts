/** Affine, invertible mapping between canvas pixels and task coordinates.
 *
 * Task space is y-up; the canvas is y-down. A single uniform scale keeps
 * the field geometrically faithful (no anisotropic stretch).
 */

export interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export interface CanvasMapping {
  scale: number; // pixels per task unit
  originPx: number; // pixel x of task x = 0... actually of bounds.xMin
  originPy: number; // pixel y of task yMax (canvas top of the fitted box)
  bounds: Bounds;
}

export function makeMapping(widthPx: number, heightPx: number, bounds: Bounds): CanvasMapping {
  const spanX = bounds.xMax - bounds.xMin;
  const spanY = bounds.yMax - bounds.yMin;
  if (spanX <= 0 || spanY <= 0) {
    throw new Error(`degenerate bounds: ${JSON.stringify(bounds)}`);
  }
  const scale = Math.min(widthPx / spanX, heightPx / spanY);
  // center the fitted box in the canvas
  const originPx = (widthPx - scale * spanX) / 2;
  const originPy = (heightPx - scale * spanY) / 2;
  return { scale, originPx, originPy, bounds };
}

export function pxToTask(m: CanvasMapping, px: number, py: number): [number, number] {
  const x = m.bounds.xMin + (px - m.originPx) / m.scale;
  const y = m.bounds.yMax - (py - m.originPy) / m.scale;
  return [x, y];
}

export function taskToPx(m: CanvasMapping, x: number, y: number): [number, number] {
  const px = m.originPx + (x - m.bounds.xMin) * m.scale;
  const py = m.originPy + (m.bounds.yMax - y) * m.scale;
  return [px, py];
}
