/**
 * Marching cubes over the cube lattice, matching the engine: cells touching a
 * NaN voxel are skipped, vertices on shared lattice edges are welded, the
 * scan order is fixed (t, then y, then x), ambiguous cases use the standard
 * table, and triangles wind outward from the value >= isovalue region.
 * Degenerate (repeated-vertex) triangles are dropped.
 */

import { CASE_EDGES, CASE_TRIANGLES, EDGE_VERTICES, VERTEX_OFFSETS } from "./mctables.js";
import type { CubeData } from "./stcube.js";

export interface Mesh {
  /** Vertex positions in cube coordinates, flat [x0, y0, t0, x1, ...]. */
  positions: Float64Array;
  /** Vertex index triples, flat. */
  triangles: Uint32Array;
}

export function extractIsosurface(cube: CubeData, isovalue: number): Mesh {
  if (!Number.isFinite(isovalue)) throw new Error(`isovalue must be finite, got ${isovalue}`);
  const { nx, ny, nt } = cube;
  const values = cube.values;
  const positions: number[] = [];
  const triangles: number[] = [];
  const vertOfEdge = new Map<number, number>();
  const cornerVals = new Float64Array(8);
  const edgeVertex = new Int32Array(12);
  const flat = (x: number, y: number, t: number) => (t * ny + y) * nx + x;

  for (let k = 0; k + 1 < nt; k++) {
    for (let j = 0; j + 1 < ny; j++) {
      for (let i = 0; i + 1 < nx; i++) {
        let ok = true;
        for (let n = 0; n < 8; n++) {
          const [dx, dy, dz] = VERTEX_OFFSETS[n];
          const v = values[flat(i + dx, j + dy, k + dz)];
          if (!Number.isFinite(v)) { ok = false; break; }
          cornerVals[n] = v;
        }
        if (!ok) continue;
        let caseIndex = 0;
        for (let n = 0; n < 8; n++) {
          if (cornerVals[n] < isovalue) caseIndex |= 1 << n;
        }
        const crossed = CASE_EDGES[caseIndex];
        if (crossed === 0) continue;

        for (let e = 0; e < 12; e++) {
          if (((crossed >> e) & 1) === 0) continue;
          const [a, b] = EDGE_VERTICES[e];
          let [ax, ay, az] = VERTEX_OFFSETS[a];
          let [bx, by, bz] = VERTEX_OFFSETS[b];
          let ga = flat(i + ax, j + ay, k + az);
          let gb = flat(i + bx, j + by, k + bz);
          let va = cornerVals[a];
          let vb = cornerVals[b];
          if (ga > gb) {
            // canonical endpoint order keeps shared-edge vertices crack free
            [ga, gb] = [gb, ga];
            [va, vb] = [vb, va];
            [ax, ay, az, bx, by, bz] = [bx, by, bz, ax, ay, az];
          }
          // lattice edges only ever step by 1, nx, or nx*ny: 3 keys per voxel
          const step = gb - ga;
          const dir = step === 1 ? 0 : step === nx ? 1 : 2;
          const key = ga * 3 + dir;
          let idx = vertOfEdge.get(key);
          if (idx === undefined) {
            let mu = (isovalue - va) / (vb - va);
            mu = Math.min(Math.max(mu, 0), 1);
            idx = positions.length / 3;
            positions.push(i + ax + mu * (bx - ax), j + ay + mu * (by - ay), k + az + mu * (bz - az));
            vertOfEdge.set(key, idx);
          }
          edgeVertex[e] = idx;
        }

        const row = CASE_TRIANGLES[caseIndex];
        for (let s = 0; s < 16 && row[s] >= 0; s += 3) {
          const t0 = edgeVertex[row[s]];
          const t1 = edgeVertex[row[s + 1]];
          const t2 = edgeVertex[row[s + 2]];
          if (t0 === t1 || t1 === t2 || t0 === t2) continue;
          triangles.push(t0, t1, t2);
        }
      }
    }
  }
  return {
    positions: Float64Array.from(positions),
    triangles: Uint32Array.from(triangles),
  };
}
