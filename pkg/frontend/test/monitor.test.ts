import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DEFAULT_REPLAY_RATE, MonitorView } from "../src/monitor.js";
import type { MonitorFrame } from "../src/types.js";
import { FakeFetch, fixture } from "./helpers.js";

const FRAME_T120_SAM = fixture<MonitorFrame>("monitor_t120_sam.json");
const FRAME_T50 = fixture<MonitorFrame>("monitor_t50.json");

function makeView(ff: FakeFetch) {
  const api = new ApiClient("", ff.fetchFn).project("p");
  const container = document.createElement("div");
  document.body.appendChild(container);
  return new MonitorView(container, api);
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("frames", () => {
  it("focus change fetches the frame and renders the focused agent", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", FRAME_T120_SAM);
    const view = makeView(ff);
    await view.show(120, "sam");

    expect(ff.urls("/monitor")).toEqual(["/projects/p/monitor?focus=sam&t=120"]);
    expect(view.label.textContent).toBe("t=120");
    const sam = view.svg.querySelector('circle[data-agent="sam"]');
    expect(sam?.classList.contains("focused")).toBe(true);
    expect(view.svg.querySelectorAll("circle.agent-dot").length).toBe(3);
    expect(view.svg.querySelectorAll("rect.room").length).toBe(6);
  });

  it("zooms the viewport to the focused location", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", FRAME_T120_SAM);
    const view = makeView(ff);
    await view.show(120, "sam");
    expect(view.svg.getAttribute("viewBox")).toBe("31 61 38 33");
  });

  it("shows the whole map when nothing is focused", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", FRAME_T50);
    const view = makeView(ff);
    await view.show(50);
    const viewBox = view.svg.getAttribute("viewBox") ?? "";
    const [x, y, w, h] = viewBox.split(" ").map(Number);
    const xs = FRAME_T50.mapMeta.locations.map((l) => l.bounds[0]);
    const ys = FRAME_T50.mapMeta.locations.map((l) => l.bounds[1]);
    expect(x).toBeLessThanOrEqual(Math.min(...xs));
    expect(y).toBeLessThanOrEqual(Math.min(...ys));
    expect(w).toBeGreaterThan(0);
    expect(h).toBeGreaterThan(0);
  });

  it("setFocus refetches the current tick with the focus parameter", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", (url: URL) =>
      url.searchParams.get("focus") === "sam" ? FRAME_T120_SAM : FRAME_T50,
    );
    const view = makeView(ff);
    await view.show(50);
    await view.setFocus("sam");
    expect(ff.urls("/monitor")).toEqual([
      "/projects/p/monitor?t=50",
      "/projects/p/monitor?focus=sam&t=50",
    ]);
  });
});

describe("replay", () => {
  it("walks every tick strictly in order", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", (url: URL) => ({
      ...FRAME_T50,
      t: Number(url.searchParams.get("t")),
    }));
    const view = makeView(ff);
    await view.show(100);
    await view.replay(100, 150, Infinity);

    expect(view.renderedTimes.length).toBe(51);
    expect(view.renderedTimes[0]).toBe(100);
    const frames = view.renderedTimes.slice(1);
    expect(frames.length).toBe(50);
    expect(frames).toEqual(
      Array.from({ length: 50 }, (_, i) => 101 + i),
    );
    expect(ff.urls("/monitor").length).toBe(51);
  });

  it("defaults to twenty frames per second", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", (url: URL) => ({
      ...FRAME_T50,
      t: Number(url.searchParams.get("t")),
    }));
    const view = makeView(ff);
    await view.replay(100, 101);
    expect(DEFAULT_REPLAY_RATE).toBe(20);
    expect(view.lastReplay).toEqual({ from: 100, to: 101, rate: 20 });
  });

  it("stopReplay lets the frame in flight finish and requests no more", async () => {
    const ff = new FakeFetch();
    ff.route("/monitor", (url: URL) => ({
      ...FRAME_T50,
      t: Number(url.searchParams.get("t")),
    }));
    const view = makeView(ff);
    await view.show(100);
    const running = view.replay(100, 150, Infinity);
    view.stopReplay();
    await running;
    expect(view.renderedTimes).toEqual([100, 101]);
  });
});
