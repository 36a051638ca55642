import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { OutlineView } from "../src/outline.js";
import type { InteractionArea, OutlinePayload, SearchHit } from "../src/types.js";
import { FakeFetch, fixture, flush } from "./helpers.js";

const OUTLINE = fixture<OutlinePayload>("outline.json");
const OUTLINE_N5_SAM = fixture<OutlinePayload>("outline_n5_sam.json");
const SEARCH_HITS = fixture<SearchHit[]>("search_party.json");
const BOUNDS: [number, number] = [0, 200];

function makeView(ff: FakeFetch, callbacks = {}) {
  const api = new ApiClient("", ff.fetchFn).project("p");
  const container = document.createElement("div");
  document.body.appendChild(container);
  return new OutlineView(container, api, BOUNDS, callbacks);
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("rendering", () => {
  it("places bands, curves, areas and markers from one payload", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff);
    await view.load([0, 200]);

    const bands = view.svg.querySelectorAll("rect.band");
    expect(bands.length).toBe(6);
    const cafe = view.svg.querySelector('rect.band[data-location="hobbs_cafe"]');
    expect(cafe?.getAttribute("y")).toBe("100");
    expect(cafe?.getAttribute("height")).toBe("100");

    expect(view.svg.querySelectorAll("polyline.curve").length).toBe(3);
    expect(view.svg.querySelectorAll("rect.area").length).toBe(4);
    expect(view.svg.querySelectorAll("rect.area-conversation").length).toBe(1);
    expect(view.svg.querySelectorAll("rect.area-colocation").length).toBe(3);
    expect(view.svg.querySelectorAll("text.segment-marker").length).toBe(30);
    expect(view.svg.getAttribute("viewBox")).toBe("0 0 1200 600");
  });

  it("keeps the band order and labels delivered by the server", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff);
    await view.load([0, 200]);
    const labels = [...view.svg.querySelectorAll("text.band-label")].map(
      (el) => el.textContent,
    );
    expect(labels.length).toBe(6);
    expect(labels[1]).toBe(OUTLINE.bands[1]!.name);
  });
});

describe("resegmentation", () => {
  it("double-click requests the visible range at the default granularity", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE_N5_SAM);
    const view = makeView(ff);
    await view.load([0, 200], 5, ["sam"]);
    expect(ff.urls("/outline")).toEqual([
      "/projects/p/outline?agents=sam&from=0&n=5&to=200",
    ]);

    view.svg.dispatchEvent(new MouseEvent("dblclick"));
    await flush();

    const urls = ff.urls("/outline");
    expect(urls.length).toBe(2);
    expect(urls[1]).toBe("/projects/p/outline?agents=sam&from=0&n=10&to=200");
  });

  it("wheel zoom refetches only the outline for the narrowed range", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff);
    await view.load([0, 200]);

    view.svg.dispatchEvent(new WheelEvent("wheel", { deltaY: -1 }));
    await flush();

    const urls = ff.urls("/outline");
    expect(urls.length).toBe(2);
    expect(urls[1]).toBe("/projects/p/outline?from=20&n=10&to=180");
    expect(ff.urls("/search").length).toBe(0);
    expect(ff.urls().length).toBe(2);
  });

  it("zooming out is clamped to the log bounds", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff);
    await view.load([0, 200]);
    expect(view.zoomedRange(100, 2.0)).toEqual([0, 201]);
  });
});

describe("search overlay", () => {
  it("adds highlights without refetching the outline", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    ff.route("/search", SEARCH_HITS);
    const view = makeView(ff);
    await view.load([0, 200]);

    await view.setSearch("party");

    expect(ff.urls("/outline").length).toBe(1);
    expect(ff.urls("/search")).toEqual(["/projects/p/search?q=party"]);
    const dots = view.svg.querySelectorAll("circle.search-hit");
    expect(dots.length).toBe(SEARCH_HITS.length);
    const sam = view.svg.querySelector(
      'circle.search-hit[data-agent="sam"][data-t="55"]',
    );
    expect(sam).not.toBeNull();
    expect(sam?.querySelector("title")?.textContent).toContain("1.000");
  });

  it("clearing the query removes the overlay without a request", async () => {
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    ff.route("/search", SEARCH_HITS);
    const view = makeView(ff);
    await view.load([0, 200]);
    await view.setSearch("party");
    await view.setSearch("");
    expect(ff.urls("/search").length).toBe(1);
    expect(view.svg.querySelectorAll("circle.search-hit").length).toBe(0);
  });
});

describe("interaction", () => {
  it("clicking an area reports its participants", async () => {
    const clicked: InteractionArea[] = [];
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff, { onAreaClick: (a: InteractionArea) => clicked.push(a) });
    await view.load([0, 200]);

    const conversation = view.svg.querySelector("rect.area-conversation");
    conversation?.dispatchEvent(new MouseEvent("click"));
    expect(clicked.length).toBe(1);
    expect(clicked[0]).toMatchObject({
      kind: "conversation",
      agents: ["ayesha", "isabella"],
      timeRange: [50, 60],
    });
  });

  it("clicking a segment marker focuses the segment start", async () => {
    const focused: [string, number][] = [];
    const ff = new FakeFetch();
    ff.route("/outline", OUTLINE);
    const view = makeView(ff, {
      onFocus: (agent: string, t: number) => focused.push([agent, t]),
    });
    await view.load([0, 200]);

    const marker = view.svg.querySelector(
      'text.segment-marker[data-agent="ayesha"][data-start="50"]',
    );
    marker?.dispatchEvent(new MouseEvent("click"));
    expect(focused).toEqual([["ayesha", 50]]);
  });
});

describe("stale responses", () => {
  it("a late response for an older request is discarded", async () => {
    const ff = new FakeFetch(true);
    const view = makeView(ff);

    const first = view.load([0, 200]);
    const second = view.load([50, 100]);
    expect(ff.pendingCount()).toBe(2);

    ff.resolvePending(1, { ...OUTLINE, range: [50, 100] });
    await flush();
    expect(view.payload?.range).toEqual([50, 100]);

    ff.resolvePending(0, OUTLINE);
    await Promise.all([first, second]);
    expect(view.payload?.range).toEqual([50, 100]);
  });
});
