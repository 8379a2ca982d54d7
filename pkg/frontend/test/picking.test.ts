import { describe, expect, it } from "vitest";

import { pickVoxel, type PickOptions } from "../src/picking.js";
import { CubeData, type CubeHeader } from "../src/stcube.js";

const OPTS: PickOptions = {
  transform: "none",
  curve: { lo: 0, hi: 1, maxOpacity: 1 },
};

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

describe("pickVoxel", () => {
  it("misses on empty background", () => {
    const cube = cubeOf(3, 3, 3, () => NaN);
    expect(pickVoxel(cube, [-1, 1.5, 1.5], [1, 0, 0], OPTS)).toBeNull();
  });

  it("misses rays that never enter the lattice", () => {
    const cube = cubeOf(3, 3, 3, () => 5);
    expect(pickVoxel(cube, [-1, -1, -1], [0, 0, -1], OPTS)).toBeNull();
  });

  it("hits a single-voxel cube dead on", () => {
    const cube = cubeOf(1, 1, 1, () => 7.25);
    const pick = pickVoxel(cube, [0.5, 0.5, -2], [0, 0, 1], OPTS);
    expect(pick).toEqual({ col: 0, row: 0, hour: 0, value: 7.25 });
  });

  it("returns the front-most visible voxel along the ray", () => {
    // wall of transparent (zero-opacity) voxels before a visible one
    const cube = cubeOf(5, 1, 1, (x) => (x < 3 ? 0 : 9));
    const opts: PickOptions = { ...OPTS, curve: { lo: 1, hi: 2, maxOpacity: 1 } };
    const pick = pickVoxel(cube, [-1, 0.5, 0.5], [1, 0, 0], opts);
    expect(pick?.col).toBe(3);
    expect(pick?.value).toBe(9);
  });

  it("respects slice mode by ignoring other hours", () => {
    const cube = cubeOf(1, 1, 4, (_x, _y, t) => t + 1);
    const pick = pickVoxel(cube, [0.5, 0.5, -1], [0, 0, 1], { ...OPTS, sliceHour: 2 });
    expect(pick?.hour).toBe(2);
    expect(pick?.value).toBe(3);
  });

  it("never lets the display transform change the reported value", () => {
    const cube = cubeOf(2, 2, 2, () => 1234.5);
    const plain = pickVoxel(cube, [-1, 0.5, 0.5], [1, 0, 0], OPTS);
    const logged = pickVoxel(cube, [-1, 0.5, 0.5], [1, 0, 0], {
      transform: "log1p",
      curve: { lo: 0, hi: 10, maxOpacity: 1 },
    });
    expect(plain?.value).toBe(1234.5);
    expect(logged?.value).toBe(1234.5);
  });

  it("walks diagonals without skipping voxels", () => {
    const cube = cubeOf(4, 4, 4, (x, y, t) => (x === 3 && y === 3 && t === 3 ? 5 : 0));
    const opts: PickOptions = { ...OPTS, curve: { lo: 1, hi: 2, maxOpacity: 1 } };
    const pick = pickVoxel(cube, [-0.5, -0.5, -0.5], [1, 1, 1], opts);
    expect(pick).not.toBeNull();
    expect(pick?.col).toBe(3);
  });
});
