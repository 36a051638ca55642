// Test support: canned server payloads captured from the fixture project,
// and a recording fetch stub that replays them.

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

export function fixture<T>(name: string): T {
  const path = resolve(process.cwd(), "test/fixtures", name);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

type Handler = (url: URL) => unknown;

interface Route {
  matches: (url: URL) => boolean;
  handler: Handler;
}

// Records every request. In manual mode responses are held until
// resolvePending is called, which lets tests control completion order.
export class FakeFetch {
  calls: { method: string; url: URL }[] = [];
  private routes: Route[] = [];
  private pending: { url: URL; resolve: (response: Response) => void }[] = [];

  constructor(readonly manual = false) {}

  route(path: string | RegExp, handler: Handler | unknown): void {
    const matches =
      typeof path === "string"
        ? (url: URL) => url.pathname.endsWith(path)
        : (url: URL) => path.test(url.pathname);
    const fn = typeof handler === "function" ? (handler as Handler) : () => handler;
    this.routes.push({ matches, handler: fn });
  }

  readonly fetchFn: typeof fetch = (input, init) => {
    const raw =
      typeof input === "string"
        ? input
        : input instanceof URL
          ? input.href
          : input.url;
    const url = new URL(raw, "http://fake.test");
    this.calls.push({ method: init?.method ?? "GET", url });
    if (this.manual) {
      return new Promise<Response>((resolve) => {
        this.pending.push({ url, resolve });
      });
    }
    return Promise.resolve(this.respond(url));
  };

  pendingCount(): number {
    return this.pending.length;
  }

  resolvePending(index: number, payload?: unknown): void {
    const entry = this.pending[index];
    if (!entry) throw new Error(`no pending request at index ${index}`);
    entry.resolve(payload !== undefined ? jsonResponse(payload) : this.respond(entry.url));
  }

  urls(path?: string | RegExp): string[] {
    let selected = this.calls;
    if (path !== undefined) {
      const matches =
        typeof path === "string"
          ? (url: URL) => url.pathname.endsWith(path)
          : (url: URL) => path.test(url.pathname);
      selected = selected.filter((c) => matches(c.url));
    }
    return selected.map((c) => c.url.pathname + c.url.search);
  }

  private respond(url: URL): Response {
    for (const route of this.routes) {
      if (route.matches(url)) {
        const out = route.handler(url);
        return out instanceof Response ? out : jsonResponse(out);
      }
    }
    return jsonResponse({ detail: `no route for ${url.pathname}` }, 404);
  }
}
