import { describe, expect, it } from "vitest";

import { DEFAULT_VIEW, parseViewState, viewStateQuery } from "../src/viewstate.js";

describe("view state URL round trip", () => {
  it("defaults on an empty query", () => {
    expect(parseViewState("")).toEqual(DEFAULT_VIEW);
  });

  it("round-trips a customized state", () => {
    const state = {
      ...DEFAULT_VIEW,
      theta: 1.25,
      zoom: 2,
      colormap: "magma" as const,
      transform: "none" as const,
      isoMode: "percentile" as const,
      isoLevel: 95,
      sliceHour: 6,
    };
    const back = parseViewState("?" + viewStateQuery(state));
    expect(back).toEqual(state);
  });

  it("ignores malformed values", () => {
    const state = parseViewState("?slice=26&iso=banana&colormap=neon&theta=abc");
    expect(state.sliceHour).toBeNull();
    expect(state.isoLevel).toBeNull();
    expect(state.colormap).toBe(DEFAULT_VIEW.colormap);
    expect(state.theta).toBe(DEFAULT_VIEW.theta);
  });

  it("rejects out-of-range percentile isovalues", () => {
    const state = parseViewState("?isoMode=percentile&iso=150");
    expect(state.isoLevel).toBeNull();
  });
});
