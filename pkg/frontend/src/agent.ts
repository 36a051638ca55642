// Per-agent drill-down view. The timeline payload already contains every
// task and operation in the requested range, so expanding a time point or a
// task reveals data that is on hand; only opening an operation's full
// record or its cause edges goes back to the server.

import type { ProjectApi } from "./api.js";
import { refKey, type CausesPayload, type OperationDetail, type OpRef, type TimelinePayload } from "./types.js";

export interface AgentViewCallbacks {
  onFocus?: (agent: string, t: number) => void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class AgentView {
  timeline: TimelinePayload | null = null;
  detail: OperationDetail | null = null;
  causes: CausesPayload | null = null;
  causeAnchor: OpRef | null = null;

  readonly root: HTMLElement;
  private pointsEl: HTMLElement;
  private detailEl: HTMLElement;
  private overlayEl: HTMLElement;
  private minimapEl: HTMLElement;
  private seq = 0;

  constructor(
    readonly container: HTMLElement,
    readonly api: ProjectApi,
    readonly callbacks: AgentViewCallbacks = {},
  ) {
    this.root = el("div", "agent-view");
    this.pointsEl = el("div", "timeline-points");
    this.detailEl = el("div", "operation-detail");
    this.overlayEl = el("div", "cause-overlay");
    this.minimapEl = el("div", "minimap");
    this.root.append(this.pointsEl, this.detailEl, this.overlayEl, this.minimapEl);
    container.appendChild(this.root);
  }

  async load(agent: string, range?: [number, number]): Promise<void> {
    const seq = ++this.seq;
    const payload = await this.api.timeline(agent, range);
    if (seq !== this.seq) return;
    this.timeline = payload;
    this.detail = null;
    this.causes = null;
    this.causeAnchor = null;
    this.renderPoints();
    this.renderDetail();
    this.renderCauses();
    this.renderMinimap();
  }

  // Expanding a point only toggles a class; the tasks were delivered with
  // the timeline payload.
  togglePoint(t: number): void {
    const point = this.pointsEl.querySelector(`.point[data-t="${t}"]`);
    point?.classList.toggle("expanded");
  }

  async openOperation(ref: OpRef): Promise<void> {
    const detail = await this.api.operation(ref);
    this.detail = detail;
    this.causes = null;
    this.causeAnchor = null;
    this.renderDetail();
    this.renderCauses();
    this.renderMinimap();
    this.callbacks.onFocus?.(ref.agent, ref.t);
  }

  async showCauses(ref: OpRef, opts: { delta?: number; scope?: string } = {}): Promise<void> {
    const payload = await this.api.causes(ref, opts);
    this.causes = payload;
    this.causeAnchor = { t: ref.t, agent: ref.agent, opIndex: ref.opIndex };
    this.renderCauses();
    this.renderMinimap();
  }

  clearCauses(): void {
    this.causes = null;
    this.causeAnchor = null;
    this.renderCauses();
    this.renderMinimap();
  }

  private renderPoints(): void {
    this.pointsEl.textContent = "";
    const timeline = this.timeline;
    if (!timeline) return;
    for (const point of timeline.points) {
      const pointEl = el("div", "point");
      pointEl.dataset["t"] = String(point.t);
      const header = el("button", "point-header", `t=${point.t}`);
      header.addEventListener("click", () => this.togglePoint(point.t));
      pointEl.appendChild(header);
      const tasksEl = el("div", "tasks");
      for (const task of point.tasks) {
        const taskEl = el("div", `task task-${task.taskKind}`);
        taskEl.dataset["taskId"] = task.taskId;
        taskEl.appendChild(el("div", "task-header", `${task.taskKind} ${task.taskId}`));
        for (const op of task.operations) {
          const ref: OpRef = { t: point.t, agent: timeline.agent, opIndex: op.opIndex };
          const opEl = el("button", `op op-${op.opKind}`, op.text);
          opEl.dataset["t"] = String(ref.t);
          opEl.dataset["agent"] = ref.agent;
          opEl.dataset["opIndex"] = String(ref.opIndex);
          opEl.dataset["opKind"] = op.opKind;
          if (op.hasPrompt) opEl.classList.add("has-prompt");
          opEl.addEventListener("click", () => {
            void this.openOperation(ref);
          });
          taskEl.appendChild(opEl);
        }
        tasksEl.appendChild(taskEl);
      }
      pointEl.appendChild(tasksEl);
      this.pointsEl.appendChild(pointEl);
    }
  }

  private renderDetail(): void {
    this.detailEl.textContent = "";
    const detail = this.detail;
    if (!detail) return;
    this.detailEl.appendChild(
      el("h3", "detail-title", `${detail.agent} t=${detail.t} op ${detail.opIndex}`),
    );
    this.detailEl.appendChild(el("div", "detail-kind", `${detail.taskKind} / ${detail.opKind}`));
    this.detailEl.appendChild(el("div", "op-text", detail.text));
    if (detail.prompt !== null) {
      const panel = el("div", "prompt-panel");
      panel.appendChild(el("h4", "panel-title", "Prompt"));
      panel.appendChild(el("pre", "prompt", detail.prompt));
      this.detailEl.appendChild(panel);
    }
    if (detail.response !== null) {
      const panel = el("div", "response-panel");
      panel.appendChild(el("h4", "panel-title", "Response"));
      panel.appendChild(el("pre", "response", detail.response));
      this.detailEl.appendChild(panel);
    }
    const button = el("button", "causes-toggle", "Trace causes");
    button.addEventListener("click", () => {
      void this.showCauses(detail);
    });
    this.detailEl.appendChild(button);
  }

  private renderCauses(): void {
    this.overlayEl.textContent = "";
    const causes = this.causes;
    if (!causes) return;
    const edges = [
      ...causes.explicit.map((edge) => ({ edge, cls: "edge-explicit" })),
      ...causes.implicit.map((edge) => ({ edge, cls: "edge-implicit" })),
    ];
    for (const { edge, cls } of edges) {
      const edgeEl = el("div", `cause-edge ${cls}`, refKey(edge.src));
      edgeEl.dataset["kind"] = edge.kind;
      edgeEl.dataset["srcT"] = String(edge.src.t);
      edgeEl.dataset["srcAgent"] = edge.src.agent;
      edgeEl.dataset["srcOpIndex"] = String(edge.src.opIndex);
      edgeEl.dataset["similarity"] = String(edge.similarity);
      edgeEl.title = `similarity ${edge.similarity.toFixed(3)}`;
      edgeEl.addEventListener("click", () => {
        void this.openOperation(edge.src);
      });
      this.overlayEl.appendChild(edgeEl);
    }
  }

  // The minimap shows the open operation and every operation that feeds
  // into it (explicit references plus any traced edges); clicking a node
  // jumps there.
  private renderMinimap(): void {
    this.minimapEl.textContent = "";
    const detail = this.detail;
    if (!detail) return;
    const current = el("span", "mini-node current", refKey(detail));
    this.minimapEl.appendChild(current);
    const seen = new Set<string>();
    const preds: OpRef[] = [...detail.explicitCauses];
    if (this.causes) {
      for (const edge of [...this.causes.explicit, ...this.causes.implicit]) {
        preds.push(edge.src);
      }
    }
    for (const ref of preds) {
      const key = refKey(ref);
      if (seen.has(key)) continue;
      seen.add(key);
      const node = el("span", "mini-node pred", key);
      node.addEventListener("click", () => {
        void this.openOperation(ref);
      });
      this.minimapEl.appendChild(node);
    }
  }
}
