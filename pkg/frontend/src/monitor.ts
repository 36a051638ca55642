// Monitor view: a map snapshot for one tick. Agent dots and location boxes
// come straight from the frame payload. Replay walks ticks strictly in
// order, waiting for each frame to render before requesting the next.

import type { ProjectApi } from "./api.js";
import type { MonitorFrame } from "./types.js";

export const DEFAULT_REPLAY_RATE = 20;

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl(tag: string, attrs: Record<string, string | number> = {}): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class MonitorView {
  frame: MonitorFrame | null = null;
  focusAgent: string | null = null;
  renderedTimes: number[] = [];
  lastReplay: { from: number; to: number; rate: number } | null = null;

  readonly svg: SVGElement;
  readonly label: HTMLElement;
  private replayToken = 0;

  constructor(readonly container: HTMLElement, readonly api: ProjectApi) {
    this.label = document.createElement("div");
    this.label.className = "monitor-label";
    this.svg = svgEl("svg", { class: "monitor-svg", width: 600, height: 400 });
    container.append(this.label, this.svg);
  }

  async show(t: number, focus: string | null = this.focusAgent): Promise<void> {
    const frame = await this.api.monitor(t, focus ?? undefined);
    this.frame = frame;
    this.focusAgent = focus;
    this.renderedTimes.push(frame.t);
    this.render();
  }

  async setFocus(agent: string | null): Promise<void> {
    if (this.frame === null) {
      this.focusAgent = agent;
      return;
    }
    await this.show(this.frame.t, agent);
  }

  // Advances one tick at a time from the current position. rate is frames
  // per second; Infinity skips the delay entirely.
  async replay(from: number, to: number, rate: number = DEFAULT_REPLAY_RATE): Promise<void> {
    const token = ++this.replayToken;
    this.lastReplay = { from, to, rate };
    const delayMs = rate === Infinity ? 0 : 1000 / rate;
    for (let t = from + 1; t <= to; t++) {
      if (token !== this.replayToken) return;
      await this.show(t);
      if (delayMs > 0 && t < to) await sleep(delayMs);
    }
  }

  stopReplay(): void {
    this.replayToken++;
  }

  private render(): void {
    const frame = this.frame;
    if (!frame) return;
    this.label.textContent = `t=${frame.t}`;
    this.svg.textContent = "";

    const locations = frame.mapMeta.locations;
    let box: [number, number, number, number];
    if (frame.focus) {
      const [x0, y0, x1, y1] = frame.focus.bounds;
      box = [x0 - 2, y0 - 2, x1 + 2, y1 + 2];
    } else if (locations.length) {
      box = [
        Math.min(...locations.map((l) => l.bounds[0])),
        Math.min(...locations.map((l) => l.bounds[1])),
        Math.max(...locations.map((l) => l.bounds[2])),
        Math.max(...locations.map((l) => l.bounds[3])),
      ];
    } else {
      box = [0, 0, 100, 100];
    }
    const pad = 2;
    this.svg.setAttribute(
      "viewBox",
      `${box[0] - pad} ${box[1] - pad} ${box[2] - box[0] + 2 * pad} ${box[3] - box[1] + 2 * pad}`,
    );

    const rooms = svgEl("g", { class: "rooms" });
    for (const loc of locations) {
      const rect = svgEl("rect", {
        class: "room",
        "data-location": loc.location,
        x: loc.bounds[0],
        y: loc.bounds[1],
        width: loc.bounds[2] - loc.bounds[0],
        height: loc.bounds[3] - loc.bounds[1],
      });
      const title = svgEl("title");
      title.textContent = loc.name;
      rect.appendChild(title);
      rooms.appendChild(rect);
    }
    this.svg.appendChild(rooms);

    const dots = svgEl("g", { class: "agents" });
    for (const agent of frame.agents) {
      let cx: number;
      let cy: number;
      if (agent.position) {
        [cx, cy] = agent.position;
      } else {
        const loc = locations.find((l) => l.location === agent.location);
        if (!loc) continue;
        cx = (loc.bounds[0] + loc.bounds[2]) / 2;
        cy = (loc.bounds[1] + loc.bounds[3]) / 2;
      }
      const dot = svgEl("circle", {
        class: agent.agent === frame.focus?.agent ? "agent-dot focused" : "agent-dot",
        "data-agent": agent.agent,
        cx,
        cy,
        r: 1.5,
      });
      const title = svgEl("title");
      title.textContent = `${agent.agent} at ${agent.location}`;
      dot.appendChild(title);
      dots.appendChild(dot);
    }
    this.svg.appendChild(dots);
  }
}
