// Wires the outline, agent, and monitor views to one shared view state. A
// focus change in any view is reflected in all three.

import { ApiClient, type ProjectApi } from "./api.js";
import { AgentView } from "./agent.js";
import { MonitorView } from "./monitor.js";
import { OutlineView, DEFAULT_SEGMENTS } from "./outline.js";
import {
  initialState,
  withFocus,
  withSearch,
  withVisibleRange,
  type ViewState,
} from "./state.js";

export class App {
  state: ViewState;
  readonly outline: OutlineView;
  readonly agent: AgentView;
  readonly monitor: MonitorView;

  constructor(
    readonly root: HTMLElement,
    readonly api: ProjectApi,
    readonly bounds: [number, number],
  ) {
    this.state = initialState(api.projectId, bounds);

    const outlinePane = document.createElement("section");
    outlinePane.className = "pane outline-pane";
    const agentPane = document.createElement("section");
    agentPane.className = "pane agent-pane";
    const monitorPane = document.createElement("section");
    monitorPane.className = "pane monitor-pane";
    root.append(outlinePane, agentPane, monitorPane);

    this.outline = new OutlineView(outlinePane, api, bounds, {
      onFocus: (agent, t) => {
        void this.focus(agent, t);
      },
      onAreaClick: (area) => {
        const first = area.agents[0];
        if (first) void this.openAgent(first, area.timeRange);
      },
      onRangeChange: (range) => {
        this.state = withVisibleRange(this.state, range);
      },
    });
    this.agent = new AgentView(agentPane, api, {
      onFocus: (agent, t) => {
        void this.focus(agent, t);
      },
    });
    this.monitor = new MonitorView(monitorPane, api);
  }

  async start(): Promise<void> {
    await this.outline.load(this.state.visibleRange, DEFAULT_SEGMENTS);
  }

  async focus(agent: string, t: number): Promise<void> {
    const previous = this.state.focusPoint;
    this.state = withFocus(this.state, agent, t, this.bounds);
    if (previous && previous.agent === agent && previous.t === t) return;
    const jobs: Promise<void>[] = [this.monitor.show(t, agent)];
    if (this.agent.timeline?.agent !== agent) {
      jobs.push(this.agent.load(agent, this.state.visibleRange));
    }
    await Promise.all(jobs);
  }

  async openAgent(agent: string, range?: [number, number]): Promise<void> {
    await this.agent.load(agent, range ?? this.state.visibleRange);
  }

  async setSearch(query: string): Promise<void> {
    this.state = withSearch(this.state, query);
    await this.outline.setSearch(query);
  }
}

// Dev-page entry point. Discovers the log's time bounds with a cheap probe
// request, then builds the app against them.
export async function boot(
  root: HTMLElement,
  projectId: string,
  baseUrl = "",
): Promise<App> {
  const client = new ApiClient(baseUrl);
  const api = client.project(projectId);
  const probe = await api.outline({ n: 1 });
  const bounds: [number, number] = [probe.range[0], probe.range[1] - 1];
  const app = new App(root, api, bounds);
  await app.start();
  return app;
}
