// Outline view: location bands, one movement curve per agent, interaction
// areas, segment markers, and memory highlights, all rendered from a single
// server payload. The view never computes analysis results itself; it only
// places what the server returned.

import type { ProjectApi } from "./api.js";
import type {
  InteractionArea,
  OutlinePayload,
  SearchHit,
  SegmentMarker,
} from "./types.js";

export const DEFAULT_SEGMENTS = 10;
export const SVG_WIDTH = 1200;

const SVG_NS = "http://www.w3.org/2000/svg";

export interface OutlineCallbacks {
  onFocus?: (agent: string, t: number) => void;
  onAreaClick?: (area: InteractionArea) => void;
  onRangeChange?: (range: [number, number]) => void;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

export class OutlineView {
  payload: OutlinePayload | null = null;
  searchHits: SearchHit[] = [];
  selectedAgents: string[] = [];

  readonly svg: SVGSVGElement;
  private seq = 0;
  private searchSeq = 0;

  constructor(
    readonly container: HTMLElement,
    readonly api: ProjectApi,
    readonly bounds: [number, number],
    readonly callbacks: OutlineCallbacks = {},
  ) {
    this.svg = svgEl("svg", { class: "outline-svg", width: SVG_WIDTH });
    this.svg.addEventListener("dblclick", () => {
      void this.resegment();
    });
    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      void this.handleWheel(event as WheelEvent);
    });
    container.appendChild(this.svg);
  }

  get visibleRange(): [number, number] {
    if (this.payload) return [this.payload.range[0], this.payload.range[1]];
    return [this.bounds[0], this.bounds[1] + 1];
  }

  async load(
    range: [number, number],
    n: number = DEFAULT_SEGMENTS,
    agents: string[] = this.selectedAgents,
  ): Promise<void> {
    const seq = ++this.seq;
    const payload = await this.api.outline({
      from: range[0],
      to: range[1],
      n,
      agents,
    });
    if (seq !== this.seq) return;
    this.payload = payload;
    this.selectedAgents = [...agents];
    this.render();
    this.callbacks.onRangeChange?.(this.visibleRange);
  }

  // Double-click re-runs segmentation over exactly the visible range at the
  // default granularity.
  async resegment(): Promise<void> {
    await this.load(this.visibleRange, DEFAULT_SEGMENTS);
  }

  async handleWheel(event: WheelEvent): Promise<void> {
    const factor = event.deltaY > 0 ? 1.25 : 0.8;
    const anchor = this.timeAt(event.clientX);
    const next = this.zoomedRange(anchor, factor);
    const [lo, hi] = this.visibleRange;
    if (next[0] === lo && next[1] === hi) return;
    await this.load(next);
  }

  zoomedRange(anchor: number, factor: number): [number, number] {
    const [lo, hi] = this.visibleRange;
    const span = hi - lo;
    const newSpan = Math.max(4, Math.round(span * factor));
    const rel = span > 0 ? (anchor - lo) / span : 0.5;
    let newLo = Math.round(anchor - rel * newSpan);
    let newHi = newLo + newSpan;
    const bLo = this.bounds[0];
    const bHi = this.bounds[1] + 1;
    if (newLo < bLo) {
      newHi += bLo - newLo;
      newLo = bLo;
    }
    if (newHi > bHi) {
      newLo -= newHi - bHi;
      newHi = bHi;
    }
    return [Math.max(bLo, newLo), Math.min(bHi, newHi)];
  }

  // Search only adds an overlay; the outline geometry underneath stays as
  // fetched, so no outline request is issued here.
  async setSearch(query: string): Promise<void> {
    const seq = ++this.searchSeq;
    const hits = query ? await this.api.search(query) : [];
    if (seq !== this.searchSeq) return;
    this.searchHits = hits;
    this.renderSearchOverlay();
  }

  timeAt(clientX: number): number {
    const [lo, hi] = this.visibleRange;
    const rect = this.svg.getBoundingClientRect();
    if (rect.width <= 0) return (lo + hi) / 2;
    const rel = Math.min(1, Math.max(0, (clientX - rect.left) / rect.width));
    return lo + rel * (hi - lo);
  }

  xFor(t: number): number {
    const [lo, hi] = this.visibleRange;
    if (hi <= lo) return 0;
    return ((t - lo) / (hi - lo)) * SVG_WIDTH;
  }

  curveYAt(agent: string, t: number): number | null {
    const curve = this.payload?.curves.find((c) => c.agent === agent);
    if (!curve || curve.points.length === 0) return null;
    let best: [number, number] | null = null;
    for (const point of curve.points) {
      if (point[0] <= t && (best === null || point[0] > best[0])) best = point;
    }
    return (best ?? curve.points[0]!)[1];
  }

  private render(): void {
    const payload = this.payload;
    if (!payload) return;
    this.svg.textContent = "";
    const height = payload.bands.length
      ? Math.max(...payload.bands.map((b) => b.y1))
      : 100;
    this.svg.setAttribute("viewBox", `0 0 ${SVG_WIDTH} ${height}`);
    this.svg.setAttribute("height", String(height));

    const bands = svgEl("g", { class: "bands" });
    for (const band of payload.bands) {
      const rect = svgEl("rect", {
        class: "band",
        "data-location": band.location,
        x: 0,
        y: band.y0,
        width: SVG_WIDTH,
        height: band.y1 - band.y0,
      });
      bands.appendChild(rect);
      const label = svgEl("text", {
        class: "band-label",
        x: 4,
        y: band.y0 + 12,
      });
      label.textContent = band.name;
      bands.appendChild(label);
    }
    this.svg.appendChild(bands);

    const areas = svgEl("g", { class: "areas" });
    for (const area of payload.interactionAreas) {
      const ys = area.agents
        .map((a) => this.curveYAt(a, area.timeRange[0]))
        .filter((y): y is number => y !== null);
      const y0 = ys.length ? Math.min(...ys) - 4 : 0;
      const y1 = ys.length ? Math.max(...ys) + 4 : 8;
      const rect = svgEl("rect", {
        class: `area area-${area.kind}`,
        "data-agents": area.agents.join(","),
        "data-kind": area.kind,
        x: this.xFor(area.timeRange[0]),
        y: y0,
        width: this.xFor(area.timeRange[1]) - this.xFor(area.timeRange[0]),
        height: y1 - y0,
      });
      rect.addEventListener("click", () => this.callbacks.onAreaClick?.(area));
      const title = svgEl("title");
      title.textContent = `${area.kind}: ${area.agents.join(", ")} at ${area.location}`;
      rect.appendChild(title);
      areas.appendChild(rect);
    }
    this.svg.appendChild(areas);

    const curves = svgEl("g", { class: "curves" });
    for (const curve of payload.curves) {
      const pts = curve.points
        .map((p) => `${this.xFor(p[0]).toFixed(1)},${p[1]}`)
        .join(" ");
      const line = svgEl("polyline", {
        class: "curve",
        "data-agent": curve.agent,
        points: pts,
        fill: "none",
      });
      line.addEventListener("click", (event) => {
        const t = Math.round(this.timeAt((event as MouseEvent).clientX));
        this.callbacks.onFocus?.(curve.agent, t);
      });
      curves.appendChild(line);
    }
    this.svg.appendChild(curves);

    const markers = svgEl("g", { class: "markers" });
    for (const marker of payload.segmentMarkers) {
      markers.appendChild(this.renderMarker(marker));
    }
    this.svg.appendChild(markers);

    this.svg.appendChild(svgEl("g", { class: "search-overlay" }));
    this.renderSearchOverlay();
  }

  private renderMarker(marker: SegmentMarker): SVGElement {
    const y = this.curveYAt(marker.agent, marker.start) ?? 0;
    const el = svgEl("text", {
      class: "segment-marker",
      "data-agent": marker.agent,
      "data-start": marker.start,
      "data-end": marker.end,
      x: this.xFor(marker.start),
      y: y - 2,
    });
    el.textContent = marker.emoji;
    const title = svgEl("title");
    title.textContent = marker.description;
    el.appendChild(title);
    el.addEventListener("click", () =>
      this.callbacks.onFocus?.(marker.agent, marker.start),
    );
    return el;
  }

  private renderSearchOverlay(): void {
    const overlay = this.svg.querySelector("g.search-overlay");
    if (!overlay) return;
    overlay.textContent = "";
    const [lo, hi] = this.visibleRange;
    for (const hit of this.searchHits) {
      if (hit.t < lo || hit.t >= hi) continue;
      const y = this.curveYAt(hit.agent, hit.t);
      if (y === null) continue;
      const dot = svgEl("circle", {
        class: "search-hit",
        "data-agent": hit.agent,
        "data-t": hit.t,
        "data-op-index": hit.opIndex,
        cx: this.xFor(hit.t),
        cy: y,
        r: 5,
      });
      const title = svgEl("title");
      title.textContent = `score ${hit.score.toFixed(3)} (${hit.mode})`;
      dot.appendChild(title);
      dot.addEventListener("click", () =>
        this.callbacks.onFocus?.(hit.agent, hit.t),
      );
      overlay.appendChild(dot);
    }
  }
}
