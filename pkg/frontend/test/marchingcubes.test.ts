import { describe, expect, it } from "vitest";

import { extractIsosurface } from "../src/marchingcubes.js";
import { CubeData, type CubeHeader } from "../src/stcube.js";

function cubeOf(nx: number, ny: number, nt: number, fill: (x: number, y: number, t: number) => number): CubeData {
  const header: CubeHeader = {
    nx, ny, nt, origin_x: 0, origin_y: 0, cell_size: 1, hour0: 0, transform: "none", value_unit: "",
  };
  const values = new Float32Array(nx * ny * nt);
  for (let t = 0; t < nt; t++)
    for (let y = 0; y < ny; y++)
      for (let x = 0; x < nx; x++) values[(t * ny + y) * nx + x] = fill(x, y, t);
  return new CubeData(header, values);
}

describe("extractIsosurface", () => {
  it("yields an empty mesh when everything is below the isovalue", () => {
    const mesh = extractIsosurface(cubeOf(4, 4, 4, () => 0), 1);
    expect(mesh.triangles.length).toBe(0);
  });

  it("wraps a single hot voxel in a closed, outward, Euler-2 surface", () => {
    const mesh = extractIsosurface(
      cubeOf(5, 5, 5, (x, y, t) => (x === 2 && y === 2 && t === 2 ? 10 : 0)),
      5,
    );
    const v = mesh.positions.length / 3;
    const f = mesh.triangles.length / 3;
    const edgeUse = new Map<string, number>();
    for (let s = 0; s < mesh.triangles.length; s += 3) {
      const tri = [mesh.triangles[s], mesh.triangles[s + 1], mesh.triangles[s + 2]];
      for (const [a, b] of [[tri[0], tri[1]], [tri[1], tri[2]], [tri[2], tri[0]]]) {
        const key = `${Math.min(a, b)}:${Math.max(a, b)}`;
        edgeUse.set(key, (edgeUse.get(key) ?? 0) + 1);
      }
    }
    expect([...edgeUse.values()].every((n) => n === 2)).toBe(true);
    expect(v - edgeUse.size + f).toBe(2);

    // outward orientation: positive signed volume via the divergence theorem
    let signed6 = 0;
    const p = mesh.positions;
    for (let s = 0; s < mesh.triangles.length; s += 3) {
      const [a, b, c] = [mesh.triangles[s] * 3, mesh.triangles[s + 1] * 3, mesh.triangles[s + 2] * 3];
      signed6 +=
        p[a] * (p[b + 1] * p[c + 2] - p[b + 2] * p[c + 1]) -
        p[a + 1] * (p[b] * p[c + 2] - p[b + 2] * p[c]) +
        p[a + 2] * (p[b] * p[c + 1] - p[b + 1] * p[c]);
    }
    expect(signed6).toBeGreaterThan(0);
  });

  it("tracks an analytic sphere within half a voxel diagonal", () => {
    const n = 17;
    const c = (n - 1) / 2;
    const mesh = extractIsosurface(
      cubeOf(n, n, n, (x, y, t) => Math.hypot(x - c, y - c, t - c)),
      5,
    );
    expect(mesh.positions.length / 3).toBeGreaterThan(100);
    for (let i = 0; i < mesh.positions.length; i += 3) {
      const r = Math.hypot(
        mesh.positions[i] - c,
        mesh.positions[i + 1] - c,
        mesh.positions[i + 2] - c,
      );
      expect(Math.abs(r - 5)).toBeLessThanOrEqual(Math.sqrt(3) / 2);
    }
  });

  it("skips lattice cells touching NaN voxels", () => {
    const cube = cubeOf(4, 4, 4, (x, y, t) => (x === 0 ? NaN : 10));
    const mesh = extractIsosurface(cube, 5);
    expect(mesh.triangles.length).toBe(0);
  });

  it("is deterministic", () => {
    const cube = cubeOf(6, 6, 6, (x, y, t) => ((x * 31 + y * 17 + t * 7) % 13) / 2);
    const a = extractIsosurface(cube, 3);
    const b = extractIsosurface(cube, 3);
    expect(Array.from(a.positions)).toEqual(Array.from(b.positions));
    expect(Array.from(a.triangles)).toEqual(Array.from(b.triangles));
  });
});
