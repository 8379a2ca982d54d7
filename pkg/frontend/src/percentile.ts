/**
 * Linear-interpolated order statistic, the same rule the engine uses:
 * index h = (n - 1) * p / 100 on the sorted valid values.
 */

import type { CubeData } from "./stcube.js";

export function percentileOfSorted(sorted: ArrayLike<number>, p: number): number {
  const n = sorted.length;
  if (n === 0) throw new Error("no valid voxels");
  if (p < 0 || p > 100) throw new Error(`percentile must be in [0, 100], got ${p}`);
  const h = (n - 1) * p / 100;
  const lo = Math.floor(h);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

export function percentile(cube: CubeData, p: number): number {
  const vals = cube.validValues();
  vals.sort();
  return percentileOfSorted(vals, p);
}
