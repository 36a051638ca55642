// Shared view state for the three coordinated views. State objects are
// immutable; every transition returns a fresh object so views can compare
// references to decide whether they need to re-render.

import type { OpRef } from "./types.js";

export interface CauseOverlaySettings {
  anchor: OpRef;
  delta: number;
  scope: "sameAgent" | "allAgents";
}

export interface ViewState {
  projectId: string;
  visibleRange: [number, number];
  selectedAgents: string[];
  focusPoint: { agent: string; t: number } | null;
  expandedNodes: string[];
  activeSearch: string;
  causeOverlay: CauseOverlaySettings | null;
}

export function initialState(projectId: string, bounds: [number, number]): ViewState {
  return {
    projectId,
    visibleRange: [bounds[0], bounds[1] + 1],
    selectedAgents: [],
    focusPoint: null,
    expandedNodes: [],
    activeSearch: "",
    causeOverlay: null,
  };
}

export const MIN_SPAN = 4;

// Zoom keeps the anchor time at the same relative position inside the
// window. factor < 1 zooms in, factor > 1 zooms out. The result is clamped
// to the log bounds and never collapses below MIN_SPAN ticks.
export function zoomRange(
  range: [number, number],
  anchor: number,
  factor: number,
  bounds: [number, number],
): [number, number] {
  const [lo, hi] = range;
  const span = hi - lo;
  const newSpan = Math.max(MIN_SPAN, Math.round(span * factor));
  const rel = span > 0 ? (anchor - lo) / span : 0.5;
  let newLo = Math.round(anchor - rel * newSpan);
  let newHi = newLo + newSpan;
  const [bLo, bHi] = [bounds[0], bounds[1] + 1];
  if (newLo < bLo) {
    newHi += bLo - newLo;
    newLo = bLo;
  }
  if (newHi > bHi) {
    newLo -= newHi - bHi;
    newHi = bHi;
  }
  newLo = Math.max(bLo, newLo);
  return [newLo, newHi];
}

export function withVisibleRange(state: ViewState, range: [number, number]): ViewState {
  if (range[0] === state.visibleRange[0] && range[1] === state.visibleRange[1]) {
    return state;
  }
  return { ...state, visibleRange: [range[0], range[1]] };
}

// Setting the focus scrolls the window just enough to keep the focused
// time visible; the span is preserved.
export function withFocus(state: ViewState, agent: string, t: number, bounds: [number, number]): ViewState {
  let [lo, hi] = state.visibleRange;
  const span = hi - lo;
  if (t < lo) {
    lo = t;
    hi = lo + span;
  } else if (t >= hi) {
    hi = t + 1;
    lo = hi - span;
  }
  const [bLo, bHi] = [bounds[0], bounds[1] + 1];
  if (lo < bLo) {
    hi += bLo - lo;
    lo = bLo;
  }
  if (hi > bHi) {
    lo -= hi - bHi;
    hi = bHi;
  }
  return {
    ...state,
    focusPoint: { agent, t },
    visibleRange: [Math.max(bLo, lo), hi],
  };
}

export function withSelectedAgents(state: ViewState, agents: string[]): ViewState {
  return { ...state, selectedAgents: [...agents] };
}

export function withSearch(state: ViewState, query: string): ViewState {
  if (query === state.activeSearch) return state;
  return { ...state, activeSearch: query };
}

export function withCauseOverlay(state: ViewState, overlay: CauseOverlaySettings | null): ViewState {
  return { ...state, causeOverlay: overlay };
}

export function toggleExpanded(state: ViewState, key: string): ViewState {
  const expanded = state.expandedNodes.includes(key)
    ? state.expandedNodes.filter((k) => k !== key)
    : [...state.expandedNodes, key];
  return { ...state, expandedNodes: expanded };
}

export function isExpanded(state: ViewState, key: string): boolean {
  return state.expandedNodes.includes(key);
}
