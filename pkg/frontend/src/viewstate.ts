/**
 * ViewState and its URL query-parameter round trip, so views are shareable.
 */

import { COLORMAPS, type ColormapId, type DisplayTransform } from "./transfer.js";

export type IsoMode = "absolute" | "percentile";

export interface ViewState {
  /** Orbit camera: azimuth and polar angles in radians, distance multiplier. */
  theta: number;
  phi: number;
  zoom: number;
  colormap: ColormapId;
  transform: DisplayTransform;
  /** Opacity ramp endpoints as percentiles of valid voxels. */
  opacityLoPct: number;
  opacityHiPct: number;
  maxOpacity: number;
  isoMode: IsoMode;
  /** Percentile (0..100) or absolute value, per isoMode; null hides the surface. */
  isoLevel: number | null;
  sliceHour: number | null;
}

export const DEFAULT_VIEW: ViewState = {
  theta: Math.PI / 4,
  phi: Math.PI / 3,
  zoom: 1.0,
  colormap: "viridis",
  transform: "log1p",
  opacityLoPct: 50,
  opacityHiPct: 99,
  maxOpacity: 0.85,
  isoMode: "percentile",
  isoLevel: null,
  sliceHour: null,
};

const FLOAT_KEYS = ["theta", "phi", "zoom", "opacityLoPct", "opacityHiPct", "maxOpacity"] as const;

export function parseViewState(query: string): ViewState {
  const params = new URLSearchParams(query);
  const state: ViewState = { ...DEFAULT_VIEW };
  for (const key of FLOAT_KEYS) {
    const raw = params.get(key);
    if (raw !== null && Number.isFinite(Number(raw))) {
      state[key] = Number(raw);
    }
  }
  const cm = params.get("colormap");
  if (cm && (COLORMAPS as readonly string[]).includes(cm)) state.colormap = cm as ColormapId;
  const tf = params.get("transform");
  if (tf === "none" || tf === "log1p") state.transform = tf;
  const mode = params.get("isoMode");
  if (mode === "absolute" || mode === "percentile") state.isoMode = mode;
  const iso = params.get("iso");
  if (iso !== null) {
    const v = Number(iso);
    if (Number.isFinite(v)) state.isoLevel = v;
  }
  const slice = params.get("slice");
  if (slice !== null) {
    const h = Number(slice);
    if (Number.isInteger(h) && h >= 0 && h < 24) state.sliceHour = h;
  }
  if (state.isoMode === "percentile" && state.isoLevel !== null) {
    if (state.isoLevel < 0 || state.isoLevel > 100) state.isoLevel = null;
  }
  return state;
}

export function viewStateQuery(state: ViewState): string {
  const params = new URLSearchParams();
  for (const key of FLOAT_KEYS) {
    if (state[key] !== DEFAULT_VIEW[key]) params.set(key, String(state[key]));
  }
  if (state.colormap !== DEFAULT_VIEW.colormap) params.set("colormap", state.colormap);
  if (state.transform !== DEFAULT_VIEW.transform) params.set("transform", state.transform);
  if (state.isoMode !== DEFAULT_VIEW.isoMode) params.set("isoMode", state.isoMode);
  if (state.isoLevel !== null) params.set("iso", String(state.isoLevel));
  if (state.sliceHour !== null) params.set("slice", String(state.sliceHour));
  return params.toString();
}
