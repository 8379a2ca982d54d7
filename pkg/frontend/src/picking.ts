/**
 * Voxel picking: walk a ray through the lattice (3D DDA) and return the first
 * voxel whose current opacity is above a visibility threshold. The reported
 * value is read from the CPU lattice, bit-identical to the cube file,
 * untouched by any display transform.
 */

import type { CubeData } from "./stcube.js";
import { applyTransform, opacityOf, type DisplayTransform, type OpacityCurve } from "./transfer.js";

export interface PickResult {
  col: number;
  row: number;
  hour: number;
  value: number;
}

export interface PickOptions {
  transform: DisplayTransform;
  curve: OpacityCurve;
  /** Opacity below this counts as transparent for picking. */
  minOpacity?: number;
  /** Restrict hits to one hour layer (slice mode). */
  sliceHour?: number | null;
}

/**
 * Ray in cube coordinates: origin o, direction d (need not be normalized).
 * Cube space spans [0, nx] x [0, ny] x [0, nt] with voxel (i, j, k) filling
 * the unit box from (i, j, k) to (i+1, j+1, k+1).
 */
export function pickVoxel(
  cube: CubeData,
  o: [number, number, number],
  d: [number, number, number],
  opts: PickOptions,
): PickResult | null {
  const dims = [cube.nx, cube.ny, cube.nt];
  const minOpacity = opts.minOpacity ?? 1e-3;

  // clip the ray against the lattice box
  let t0 = 0;
  let t1 = Infinity;
  for (let a = 0; a < 3; a++) {
    if (d[a] === 0) {
      if (o[a] < 0 || o[a] > dims[a]) return null;
      continue;
    }
    const ta = (0 - o[a]) / d[a];
    const tb = (dims[a] - o[a]) / d[a];
    t0 = Math.max(t0, Math.min(ta, tb));
    t1 = Math.min(t1, Math.max(ta, tb));
  }
  if (t0 > t1) return null;

  const eps = 1e-9;
  let t = t0 + eps;
  const pos = [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
  const cell = pos.map((p, a) => Math.min(Math.max(Math.floor(p), 0), dims[a] - 1));
  const step = d.map((v) => (v > 0 ? 1 : v < 0 ? -1 : 0));
  const tDelta = d.map((v) => (v === 0 ? Infinity : Math.abs(1 / v)));
  const tMax = [0, 0, 0];
  for (let a = 0; a < 3; a++) {
    if (d[a] === 0) {
      tMax[a] = Infinity;
    } else {
      const next = step[a] > 0 ? cell[a] + 1 : cell[a];
      tMax[a] = (next - o[a]) / d[a];
    }
  }

  while (t <= t1 + eps) {
    const [i, j, k] = cell;
    if (i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2]) {
      const v = cube.voxel(i, j, k);
      const inSlice = opts.sliceHour == null || k === opts.sliceHour;
      if (inSlice && Number.isFinite(v)) {
        const opacity = opacityOf(opts.curve, applyTransform(opts.transform, v));
        if (opacity >= minOpacity) {
          return { col: i, row: j, hour: k, value: v };
        }
      }
    }
    // advance to the next voxel boundary
    const axis = tMax[0] <= tMax[1] ? (tMax[0] <= tMax[2] ? 0 : 2) : tMax[1] <= tMax[2] ? 1 : 2;
    t = tMax[axis];
    cell[axis] += step[axis];
    tMax[axis] += tDelta[axis];
    if (cell[axis] < 0 || cell[axis] >= dims[axis]) return null;
  }
  return null;
}
