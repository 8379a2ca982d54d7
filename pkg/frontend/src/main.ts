/**
 * Application bootstrap: load the cube, wire controls to the viewer, keep the
 * URL in sync so any view is shareable.
 */

import { extractIsosurface } from "./marchingcubes.js";
import { percentileOfSorted } from "./percentile.js";
import type { PickResult } from "./picking.js";
import { downsampleToFit, loadCube, type CubeData } from "./stcube.js";
import { applyTransform, COLORMAPS, type ColormapId, type DisplayTransform } from "./transfer.js";
import { CubeViewer } from "./viewer.js";
import { DEFAULT_VIEW, parseViewState, viewStateQuery, type ViewState } from "./viewstate.js";
import type { IsoRequest, IsoResponse } from "./isoworker.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const state: ViewState = parseViewState(location.search);
let cube: CubeData | null = null;
let sortedValid: Float64Array | null = null;
let worker: Worker | null = null;
let isoToken = 0;

const viewer = new CubeViewer({ canvas: $("scene"), onPick: showPick });

function setStatus(text: string, isError = false): void {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "error" : "";
}

function transformedPercentile(p: number): number {
  if (!sortedValid) return 0;
  return applyTransform(state.transform, percentileOfSorted(sortedValid, p));
}

function refreshTransfer(): void {
  if (!cube) return;
  viewer.setTransferFunction(state.transform, {
    lo: transformedPercentile(state.opacityLoPct),
    hi: transformedPercentile(state.opacityHiPct),
    maxOpacity: state.maxOpacity,
  });
  syncUrl();
}

function isovalueFromState(): number | null {
  if (state.isoLevel === null || !sortedValid) return null;
  if (state.isoMode === "percentile") {
    return percentileOfSorted(sortedValid, state.isoLevel);
  }
  return state.isoLevel;
}

function refreshIsosurface(): void {
  if (!cube) return;
  const isovalue = isovalueFromState();
  $("iso-readout").textContent = isovalue === null ? "off" : `threshold ${fmt(isovalue)}`;
  if (isovalue === null) {
    viewer.setIsosurfaceMesh(null);
    syncUrl();
    return;
  }
  const token = ++isoToken;
  if (worker) {
    const payload: IsoRequest = {
      header: cube.header,
      values: cube.values.slice(),
      isovalue,
      token,
    };
    worker.postMessage(payload, [payload.values.buffer]);
  } else {
    viewer.setIsosurfaceMesh(extractIsosurface(cube, isovalue));
  }
  syncUrl();
}

function refreshSlice(): void {
  viewer.setSlice(state.sliceHour);
  syncUrl();
}

function showPick(pick: PickResult | null): void {
  const el = $("pick-readout");
  if (!cube) return;
  if (!pick) {
    el.textContent = "picked: nothing (background)";
    return;
  }
  const hourLabel = `${String((cube.header.hour0 + pick.hour) % 24).padStart(2, "0")}:00`;
  el.textContent =
    `picked: cell (${pick.col}, ${pick.row}) at ${hourLabel} -> ` +
    `${pick.value} ${cube.header.value_unit || ""}`.trim();
}

function fmt(v: number): string {
  return Math.abs(v) >= 1000 || (v !== 0 && Math.abs(v) < 0.01)
    ? v.toExponential(3)
    : v.toPrecision(4);
}

function syncUrl(): void {
  const query = viewStateQuery(state);
  const cubeUrl = ($("cube-url") as HTMLInputElement).value;
  const params = new URLSearchParams(query);
  if (cubeUrl !== "cube.stc") params.set("cube", cubeUrl);
  const qs = params.toString();
  history.replaceState(null, "", qs ? `?${qs}` : location.pathname);
}

function showMetadata(c: CubeData): void {
  const h = c.header;
  const valid = sortedValid ? sortedValid.length : 0;
  const lines = [
    `grid ${h.nx} x ${h.ny} x ${h.nt} hours, cell ${h.cell_size} m`,
    `valid voxels ${valid} / ${h.nx * h.ny * h.nt}`,
    sortedValid && valid
      ? `value range ${fmt(sortedValid[0])} .. ${fmt(sortedValid[valid - 1])}`
      : "no valid voxels",
    `recommended transform: ${h.transform}`,
  ];
  if (c.downsampledFrom) {
    const [ox, oy, ot] = c.downsampledFrom;
    lines.push(`NOTE: downsampled from ${ox} x ${oy} x ${ot} to fit this GPU`);
  }
  $("metadata").textContent = lines.join("\n");
}

async function load(url: string): Promise<void> {
  setStatus(`loading ${url} ...`);
  try {
    let loaded = await loadCube(url);
    loaded = downsampleToFit(loaded, viewer.maxTextureDim);
    cube = loaded;
    sortedValid = loaded.validValues();
    sortedValid.sort();
    if (state.transform === DEFAULT_VIEW.transform && loaded.header.transform === "none") {
      state.transform = "none";
    }
    viewer.setCube(loaded);
    showMetadata(loaded);
    refreshTransfer();
    refreshIsosurface();
    refreshSlice();
    setStatus(`loaded ${url}`);
  } catch (err) {
    cube = null;
    setStatus(`failed to load cube: ${(err as Error).message}`, true);
  }
}

function wireControls(): void {
  const cmSelect = $("colormap") as HTMLSelectElement;
  for (const id of COLORMAPS) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = id;
    cmSelect.appendChild(opt);
  }
  cmSelect.value = state.colormap;
  cmSelect.onchange = () => {
    state.colormap = cmSelect.value as ColormapId;
    viewer.setColormap(state.colormap);
    refreshSlice();
    syncUrl();
  };

  const tfSelect = $("transform") as HTMLSelectElement;
  tfSelect.value = state.transform;
  tfSelect.onchange = () => {
    state.transform = tfSelect.value as DisplayTransform;
    refreshTransfer();
    refreshSlice();
  };

  const lo = $("opacity-lo") as HTMLInputElement;
  const hi = $("opacity-hi") as HTMLInputElement;
  lo.value = String(state.opacityLoPct);
  hi.value = String(state.opacityHiPct);
  lo.oninput = () => {
    state.opacityLoPct = Math.min(Number(lo.value), state.opacityHiPct - 0.5);
    refreshTransfer();
    refreshSlice();
  };
  hi.oninput = () => {
    state.opacityHiPct = Math.max(Number(hi.value), state.opacityLoPct + 0.5);
    refreshTransfer();
    refreshSlice();
  };

  const isoMode = $("iso-mode") as HTMLSelectElement;
  const isoLevel = $("iso-level") as HTMLInputElement;
  const isoOn = $("iso-on") as HTMLInputElement;
  isoMode.value = state.isoMode;
  isoLevel.value = String(state.isoLevel ?? 95);
  isoOn.checked = state.isoLevel !== null;
  const isoChanged = () => {
    state.isoMode = isoMode.value as ViewState["isoMode"];
    const lvl = Number(isoLevel.value);
    if (state.isoMode === "percentile" && (lvl < 0 || lvl > 100)) {
      setStatus("percentile must be in [0, 100]", true);
      return;
    }
    state.isoLevel = isoOn.checked && Number.isFinite(lvl) ? lvl : null;
    refreshIsosurface();
  };
  isoMode.onchange = isoLevel.onchange = isoOn.onchange = isoChanged;

  const slice = $("slice") as HTMLSelectElement;
  const none = document.createElement("option");
  none.value = "";
  none.textContent = "full volume";
  slice.appendChild(none);
  for (let h = 0; h < 24; h++) {
    const opt = document.createElement("option");
    opt.value = String(h);
    opt.textContent = `${String(h).padStart(2, "0")}:00`;
    slice.appendChild(opt);
  }
  slice.value = state.sliceHour === null ? "" : String(state.sliceHour);
  slice.onchange = () => {
    state.sliceHour = slice.value === "" ? null : Number(slice.value);
    refreshSlice();
  };

  const urlInput = $("cube-url") as HTMLInputElement;
  urlInput.value = new URLSearchParams(location.search).get("cube") ?? "cube.stc";
  ($("load") as HTMLButtonElement).onclick = () => void load(urlInput.value);
}

function startWorker(): void {
  try {
    worker = new Worker(new URL("./isoworker.js", import.meta.url), { type: "module" });
    worker.onmessage = (ev: MessageEvent<IsoResponse>) => {
      if (ev.data.token !== isoToken) return; // stale extraction
      viewer.setIsosurfaceMesh({ positions: ev.data.positions, triangles: ev.data.triangles });
    };
    worker.onerror = () => {
      worker = null; // fall back to in-thread extraction
      refreshIsosurface();
    };
  } catch {
    worker = null;
  }
}

wireControls();
startWorker();
void load(($("cube-url") as HTMLInputElement).value);
