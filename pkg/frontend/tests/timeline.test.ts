import { describe, expect, it } from "vitest";

import { criticalAsHacEpisode, layoutTimeline, renderTimeline } from "../src/timeline.js";
import { filterByThreshold } from "../src/heat.js";
import { FakeBackend, makeEpisode, makeHacEpisode } from "./fakeBackend.js";
import { TriageApi } from "../src/api.js";

function bigHac(n: number) {
  return Array.from({ length: n }, (_, i) =>
    makeHacEpisode({
      episode_id: `e${i}`,
      heat: (i % 31) / 10,
      stage: ["discovery", "exploitation", "command_and_control", "benign"][i % 4],
      peak_time: 1000 + 60 * i,
      alert_count: 1 + (i % 50),
    }),
  );
}

describe("layoutTimeline", () => {
  it("scales radius with the square root of alert count", () => {
    const eps = [
      makeHacEpisode({ episode_id: "small", heat: 1, alert_count: 1, peak_time: 0 }),
      makeHacEpisode({ episode_id: "big", heat: 1, alert_count: 100, peak_time: 50 }),
      makeHacEpisode({ episode_id: "mid", heat: 1, alert_count: 25, peak_time: 100 }),
    ];
    const layout = layoutTimeline(eps, null);
    const byId = new Map(layout.bubbles.map((b) => [b.episodeId, b]));
    const rMin = 4;
    const grow = (id: string) => byId.get(id)!.r - rMin;
    // sqrt scaling: counts 1:25:100 give radius growth 1:5:10 over the baseline
    expect(grow("big") / grow("small")).toBeCloseTo(10, 5);
    expect(grow("mid") / grow("small")).toBeCloseTo(5, 5);
  });

  it("pins the critical episode rightmost in its own lane", () => {
    const eps = bigHac(40);
    const critical = criticalAsHacEpisode(
      makeEpisode({ episode_id: "crit", stage: "exfiltration", peak_time: 999999, alert_count: 9 }),
    );
    const layout = layoutTimeline(eps, critical);
    const crit = layout.bubbles.find((b) => b.critical)!;
    expect(crit.x).toBe(Math.max(...layout.bubbles.map((b) => b.x)));
    expect(layout.lanes).toContain("exfiltration");
    expect(crit.heat).toBe(3);
  });

  it("gives each stage one lane", () => {
    const layout = layoutTimeline(bigHac(20), null);
    expect(new Set(layout.lanes).size).toBe(layout.lanes.length);
    for (const b of layout.bubbles) {
      expect(layout.laneY.get(b.stage)).toBe(b.y);
    }
  });
});

describe("renderTimeline", () => {
  it("renders a 500-episode campaign without error", () => {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg") as SVGSVGElement;
    const critical = criticalAsHacEpisode(
      makeEpisode({ episode_id: "crit", stage: "exfiltration", peak_time: 10_000_000 }),
    );
    renderTimeline(svg, layoutTimeline(bigHac(500), critical));
    const circles = svg.querySelectorAll("circle");
    expect(circles.length).toBe(501);
    expect(svg.querySelectorAll("circle.critical").length).toBe(1);
  });

  it("colors bubbles by their heat attribute", () => {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg") as SVGSVGElement;
    const eps = [
      makeHacEpisode({ episode_id: "cold", heat: 0, peak_time: 0 }),
      makeHacEpisode({ episode_id: "hot", heat: 3, peak_time: 10 }),
    ];
    renderTimeline(svg, layoutTimeline(eps, null));
    const fills = Array.from(svg.querySelectorAll("circle")).map((c) => c.getAttribute("fill"));
    expect(fills).toContain("rgb(154, 160, 166)");
    expect(fills).toContain("rgb(234, 67, 53)");
  });
});

describe("slider filtering vs backend threshold results", () => {
  it("client-side filtering of a threshold-0 fetch matches the service at every step", async () => {
    const backend = new FakeBackend();
    backend.fullHac = bigHac(500);
    const api = new TriageApi("http://fake", undefined, backend.fetch);
    const hacZero = await api.hac("a000001", { threshold: 0 });
    // threshold-0 fetch drops nothing with positive heat; zero-heat episodes are
    // never members (strictly-greater rule), mirroring extract_hac
    for (let step = 0; step <= 30; step++) {
      const threshold = step / 10;
      const clientIds = filterByThreshold(hacZero.episodes, threshold)
        .map((e) => e.episode_id)
        .sort();
      const backendIds = (await api.hac("a000001", { threshold })).episodes
        .map((e) => e.episode_id)
        .sort();
      expect(clientIds).toEqual(backendIds);
    }
  });
});
