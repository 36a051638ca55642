// Thin typed client over the analysis server HTTP API.
//
// Concurrent identical requests are deduplicated: while a GET for a given
// path + query is in flight, further callers share the same promise. View
// controllers layer their own sequence numbers on top to drop stale
// responses after a zoom or focus change.

import type {
  AgentInfo,
  CausesPayload,
  MonitorFrame,
  OperationDetail,
  OpRef,
  OutlinePayload,
  SearchHit,
  TimelinePayload,
} from "./types.js";

export type Params = Record<string, string | number | undefined>;

export class ApiError extends Error {
  constructor(readonly status: number, readonly url: string, detail: string) {
    super(`${status} from ${url}: ${detail}`);
  }
}

function queryString(params: Params): string {
  const parts: string[] = [];
  for (const key of Object.keys(params).sort()) {
    const value = params[key];
    if (value === undefined) continue;
    parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
  }
  return parts.length ? `?${parts.join("&")}` : "";
}

export class ApiClient {
  private inflight = new Map<string, Promise<unknown>>();

  constructor(
    readonly baseUrl: string = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  requestKey(path: string, params: Params = {}): string {
    return path + queryString(params);
  }

  inflightCount(): number {
    return this.inflight.size;
  }

  async getJson<T>(path: string, params: Params = {}): Promise<T> {
    const key = this.requestKey(path, params);
    const pending = this.inflight.get(key);
    if (pending) return pending as Promise<T>;
    const promise = this.doRequest<T>("GET", this.baseUrl + key);
    this.inflight.set(key, promise);
    try {
      return await promise;
    } finally {
      this.inflight.delete(key);
    }
  }

  async postJson<T>(path: string, body: unknown): Promise<T> {
    return this.doRequest<T>("POST", this.baseUrl + path, body);
  }

  private async doRequest<T>(method: string, url: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(url, init);
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, url, text.slice(0, 200));
    }
    return JSON.parse(text) as T;
  }

  project(projectId: string): ProjectApi {
    return new ProjectApi(this, projectId);
  }
}

export class ProjectApi {
  constructor(readonly client: ApiClient, readonly projectId: string) {}

  private p(suffix: string): string {
    return `/projects/${this.projectId}${suffix}`;
  }

  agents(): Promise<AgentInfo[]> {
    return this.client.getJson(this.p("/agents"));
  }

  outline(opts: { from?: number; to?: number; n?: number; agents?: string[]; q?: string } = {}): Promise<OutlinePayload> {
    return this.client.getJson(this.p("/outline"), {
      from: opts.from,
      to: opts.to,
      n: opts.n,
      agents: opts.agents && opts.agents.length ? opts.agents.join(",") : undefined,
      q: opts.q || undefined,
    });
  }

  timeline(agent: string, range?: [number, number]): Promise<TimelinePayload> {
    return this.client.getJson(this.p(`/agents/${encodeURIComponent(agent)}/timeline`), {
      from: range ? range[0] : undefined,
      to: range ? range[1] : undefined,
    });
  }

  operation(ref: OpRef): Promise<OperationDetail> {
    return this.client.getJson(
      this.p(`/operations/${ref.t}/${encodeURIComponent(ref.agent)}/${ref.opIndex}`),
    );
  }

  causes(ref: OpRef, opts: { delta?: number; scope?: string } = {}): Promise<CausesPayload> {
    return this.client.getJson(
      this.p(`/operations/${ref.t}/${encodeURIComponent(ref.agent)}/${ref.opIndex}/causes`),
      { delta: opts.delta, scope: opts.scope },
    );
  }

  search(q: string, opts: { mode?: string; threshold?: number } = {}): Promise<SearchHit[]> {
    return this.client.getJson(this.p("/search"), {
      q,
      mode: opts.mode,
      threshold: opts.threshold,
    });
  }

  monitor(t: number, focus?: string): Promise<MonitorFrame> {
    return this.client.getJson(this.p("/monitor"), { t, focus });
  }
}
