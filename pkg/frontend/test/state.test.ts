import { describe, expect, it } from "vitest";

import {
  initialState,
  isExpanded,
  MIN_SPAN,
  toggleExpanded,
  withFocus,
  withSearch,
  withVisibleRange,
  zoomRange,
} from "../src/state.js";

const BOUNDS: [number, number] = [0, 200];

describe("initialState", () => {
  it("covers the whole log with an end exclusive range", () => {
    const state = initialState("p", BOUNDS);
    expect(state.visibleRange).toEqual([0, 201]);
    expect(state.focusPoint).toBeNull();
    expect(state.activeSearch).toBe("");
  });
});

describe("zoomRange", () => {
  it("zooms in around the anchor", () => {
    const [lo, hi] = zoomRange([0, 200], 100, 0.8, BOUNDS);
    expect(hi - lo).toBe(160);
    expect(lo).toBeGreaterThan(0);
    expect(hi).toBeLessThan(201);
  });

  it("keeps the anchor at the same relative position", () => {
    const [lo, hi] = zoomRange([0, 200], 50, 0.5, BOUNDS);
    const rel = (50 - lo) / (hi - lo);
    expect(rel).toBeCloseTo(0.25, 1);
  });

  it("clamps to the log bounds when zooming out", () => {
    expect(zoomRange([0, 200], 100, 2.0, BOUNDS)).toEqual([0, 201]);
  });

  it("never collapses below the minimum span", () => {
    const [lo, hi] = zoomRange([100, 104], 102, 0.1, BOUNDS);
    expect(hi - lo).toBe(MIN_SPAN);
  });

  it("stays inside bounds near the right edge", () => {
    const [lo, hi] = zoomRange([150, 201], 200, 0.5, BOUNDS);
    expect(lo).toBeGreaterThanOrEqual(0);
    expect(hi).toBeLessThanOrEqual(201);
    expect(hi - lo).toBeGreaterThanOrEqual(MIN_SPAN);
  });
});

describe("withFocus", () => {
  it("records the focus point without moving a window that already shows it", () => {
    const state = withFocus(
      withVisibleRange(initialState("p", BOUNDS), [40, 80]),
      "sam",
      60,
      BOUNDS,
    );
    expect(state.focusPoint).toEqual({ agent: "sam", t: 60 });
    expect(state.visibleRange).toEqual([40, 80]);
  });

  it("scrolls right preserving the span when focus is past the window", () => {
    const state = withFocus(
      withVisibleRange(initialState("p", BOUNDS), [40, 80]),
      "sam",
      120,
      BOUNDS,
    );
    expect(state.visibleRange).toEqual([81, 121]);
  });

  it("scrolls left when focus is before the window", () => {
    const state = withFocus(
      withVisibleRange(initialState("p", BOUNDS), [100, 140]),
      "sam",
      20,
      BOUNDS,
    );
    expect(state.visibleRange).toEqual([20, 60]);
  });

  it("clamps at the right edge of the log", () => {
    const state = withFocus(
      withVisibleRange(initialState("p", BOUNDS), [0, 40]),
      "sam",
      200,
      BOUNDS,
    );
    expect(state.visibleRange).toEqual([161, 201]);
  });
});

describe("expansion and search", () => {
  it("toggles expansion keys", () => {
    let state = initialState("p", BOUNDS);
    state = toggleExpanded(state, "110/ayesha");
    expect(isExpanded(state, "110/ayesha")).toBe(true);
    state = toggleExpanded(state, "110/ayesha");
    expect(isExpanded(state, "110/ayesha")).toBe(false);
  });

  it("returns the same object when the query is unchanged", () => {
    const state = withSearch(initialState("p", BOUNDS), "party");
    expect(withSearch(state, "party")).toBe(state);
    expect(withSearch(state, "cake")).not.toBe(state);
  });

  it("returns the same object for an identical range", () => {
    const state = initialState("p", BOUNDS);
    expect(withVisibleRange(state, [0, 201])).toBe(state);
  });
});
