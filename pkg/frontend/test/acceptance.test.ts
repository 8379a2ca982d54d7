/**
 * Viewer acceptance: parity with the engine on the mini-city cube artifact.
 * Fixtures are produced by scripts/make_fixtures.py from the engine itself.
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { percentile, percentileOfSorted } from "../src/percentile.js";
import { pickVoxel } from "../src/picking.js";
import { parseCube } from "../src/stcube.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

interface Expectations {
  percentile_95: number;
  sample_voxels: Array<{ x: number; y: number; t: number; bits: number }>;
  slice_hour: number;
  slice_triples: Array<[number, number, number]>;
}

function loadFixtures() {
  const raw = readFileSync(join(FIXTURES, "minicity_cube.stc"));
  const buffer = raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength);
  const cube = parseCube(buffer);
  const expectations = JSON.parse(
    readFileSync(join(FIXTURES, "expectations.json"), "utf-8"),
  ) as Expectations;
  return { cube, expectations };
}

function float32Bits(v: number): number {
  const buf = new ArrayBuffer(4);
  new DataView(buf).setFloat32(0, Math.fround(v), true);
  return new DataView(buf).getUint32(0, true);
}

describe("mini-city cube parity with the engine", () => {
  const { cube, expectations } = loadFixtures();

  it("loads with the documented dimensions", () => {
    expect(cube.nx).toBe(20);
    expect(cube.ny).toBe(20);
    expect(cube.nt).toBe(24);
  });

  it("pick readout is bit-exact with the cube file at 20 sampled voxels", () => {
    const curve = { lo: -1, hi: 1, maxOpacity: 1 }; // everything visible
    for (const sample of expectations.sample_voxels) {
      // aim straight up the time axis, starting just below the target voxel,
      // through the center of its cell: the first visible voxel is the target
      const pick = pickVoxel(
        cube,
        [sample.x + 0.5, sample.y + 0.5, sample.t + 0.25],
        [0, 0, 1],
        { transform: "none", curve },
      );
      expect(pick, `voxel ${sample.x},${sample.y},${sample.t}`).not.toBeNull();
      expect(pick!.col).toBe(sample.x);
      expect(pick!.row).toBe(sample.y);
      expect(pick!.hour).toBe(sample.t);
      expect(float32Bits(pick!.value)).toBe(sample.bits);
    }
  });

  it("95th percentile matches the engine within float32 rounding", () => {
    const ours = percentile(cube, 95);
    const theirs = expectations.percentile_95;
    expect(Math.abs(ours - theirs)).toBeLessThanOrEqual(1.2e-7 * Math.max(Math.abs(theirs), 1));
  });

  it("percentile endpoints follow the shared order-statistic rule", () => {
    const sorted = cube.validValues();
    sorted.sort();
    expect(percentileOfSorted(sorted, 0)).toBe(sorted[0]);
    expect(percentileOfSorted(sorted, 100)).toBe(sorted[sorted.length - 1]);
  });

  it("hour-6 slice matches the per-slice export exactly", () => {
    const ours = cube.sliceTriples(expectations.slice_hour);
    expect(ours.length).toBe(expectations.slice_triples.length);
    for (let i = 0; i < ours.length; i++) {
      const [col, row, value] = ours[i];
      const [ecol, erow, evalue] = expectations.slice_triples[i];
      expect(col).toBe(ecol);
      expect(row).toBe(erow);
      expect(value).toBe(evalue);
    }
  });
});
