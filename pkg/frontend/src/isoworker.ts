/**
 * Isosurface extraction off the UI thread. Receives the lattice buffer plus
 * dimensions and an isovalue, posts back transferable mesh arrays; the main
 * thread swaps the mesh in atomically when it arrives.
 */

import { extractIsosurface } from "./marchingcubes.js";
import { CubeData, type CubeHeader } from "./stcube.js";

export interface IsoRequest {
  header: CubeHeader;
  values: Float32Array;
  isovalue: number;
  token: number;
}

export interface IsoResponse {
  positions: Float64Array;
  triangles: Uint32Array;
  token: number;
}

self.onmessage = (ev: MessageEvent<IsoRequest>) => {
  const { header, values, isovalue, token } = ev.data;
  const mesh = extractIsosurface(new CubeData(header, values), isovalue);
  const out: IsoResponse = { positions: mesh.positions, triangles: mesh.triangles, token };
  (self as unknown as Worker).postMessage(out, [
    mesh.positions.buffer,
    mesh.triangles.buffer,
  ]);
};
