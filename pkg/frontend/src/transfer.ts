/**
 * Display transforms, opacity curve, and colormaps.
 *
 * The default opacity ramps the (transformed) value between the 50th and 99th
 * percentile of the valid voxels: below-median voxels are near invisible, the
 * highest-access voxels nearly opaque. Transforms affect rendering only; the
 * pick readout always reports untransformed lattice values.
 */

export type DisplayTransform = "none" | "log1p";

export function applyTransform(transform: DisplayTransform, v: number): number {
  return transform === "log1p" ? Math.log1p(Math.max(v, 0)) : v;
}

export interface OpacityCurve {
  /** Transformed value mapped to opacity 0 (at lo) .. maxOpacity (at hi). */
  lo: number;
  hi: number;
  maxOpacity: number;
}

export function opacityOf(curve: OpacityCurve, transformed: number): number {
  if (!Number.isFinite(transformed)) return 0;
  if (curve.hi <= curve.lo) return transformed >= curve.hi ? curve.maxOpacity : 0;
  const u = (transformed - curve.lo) / (curve.hi - curve.lo);
  return Math.min(Math.max(u, 0), 1) * curve.maxOpacity;
}

export const COLORMAPS = ["viridis", "magma", "grays"] as const;
export type ColormapId = (typeof COLORMAPS)[number];

// compact polynomial fits; close enough for display purposes
function viridis(u: number): [number, number, number] {
  const r = 0.2777 + u * (0.1050 + u * (-0.3308 + u * (-4.6342 + u * (6.2282 + u * 4.7763 * (u - 1)))));
  const g = 0.0054 + u * (1.4046 + u * (0.2148 + u * (-5.7991 + u * (14.1802 + u * (-13.7451 + u * 4.6458)))));
  const b = 0.3340 + u * (1.3845 + u * (0.0950 + u * (-19.3324 + u * (56.6906 + u * (-65.3525 + u * 26.3125)))));
  return [r, g, b];
}

function magma(u: number): [number, number, number] {
  const r = -0.0023 + u * (0.2447 + u * (8.3534 + u * (-27.6687 + u * (52.1761 + u * (-50.7673 + u * 18.6556)))));
  const g = 0.0005 + u * (0.2575 + u * (0.0919 + u * (2.1161 + u * (-9.4324 + u * (11.9941 + u * -4.0447)))));
  const b = 0.0139 + u * (2.6254 + u * (-11.5108 + u * (35.1056 + u * (-52.3864 + u * (36.9956 + u * -10.0938)))));
  return [r, g, b];
}

export function colormap(id: ColormapId, u: number): [number, number, number] {
  const x = Math.min(Math.max(u, 0), 1);
  let rgb: [number, number, number];
  if (id === "viridis") rgb = viridis(x);
  else if (id === "magma") rgb = magma(x);
  else rgb = [x, x, x];
  return [
    Math.min(Math.max(rgb[0], 0), 1),
    Math.min(Math.max(rgb[1], 0), 1),
    Math.min(Math.max(rgb[2], 0), 1),
  ];
}

/** 256-entry RGBA lookup table for shader and slice textures. */
export function colormapLut(id: ColormapId): Uint8Array {
  const lut = new Uint8Array(256 * 4);
  for (let i = 0; i < 256; i++) {
    const [r, g, b] = colormap(id, i / 255);
    lut[i * 4] = Math.round(r * 255);
    lut[i * 4 + 1] = Math.round(g * 255);
    lut[i * 4 + 2] = Math.round(b * 255);
    lut[i * 4 + 3] = 255;
  }
  return lut;
}
