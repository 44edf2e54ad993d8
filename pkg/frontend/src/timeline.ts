import { heatColor } from "./heat.js";
import type { EpisodeRecord, HacEpisode } from "./types.js";

export interface Bubble {
  episodeId: string;
  x: number;
  y: number;
  r: number;
  color: string;
  heat: number;
  stage: string;
  alertCount: number;
  critical: boolean;
}

export interface TimelineLayout {
  width: number;
  height: number;
  lanes: string[];
  laneY: Map<string, number>;
  bubbles: Bubble[];
  tMin: number;
  tMax: number;
}

const MARGIN = { left: 150, right: 40, top: 16, bottom: 28 };
const LANE_HEIGHT = 44;
const R_MIN = 4;
const R_MAX = 18;

export function criticalAsHacEpisode(critical: EpisodeRecord): HacEpisode {
  return {
    episode_id: critical.episode_id,
    heat: 3,
    stage: critical.stage,
    peak_time: critical.peak_time,
    alert_count: critical.alert_count,
    sources: critical.sources,
    targets: critical.targets,
    signatures: critical.signatures,
  };
}

/** Pure layout: x = peak time, y = stage lane, radius scales with sqrt(alert count). */
export function layoutTimeline(
  episodes: HacEpisode[],
  critical: HacEpisode | null,
  width = 960,
): TimelineLayout {
  const all = critical ? [...episodes, critical] : [...episodes];
  const lanes: string[] = [];
  for (const ep of all) {
    if (!lanes.includes(ep.stage)) lanes.push(ep.stage);
  }
  const laneY = new Map<string, number>();
  lanes.forEach((stage, i) => laneY.set(stage, MARGIN.top + LANE_HEIGHT * (i + 0.5)));
  const height = MARGIN.top + LANE_HEIGHT * Math.max(lanes.length, 1) + MARGIN.bottom;

  const times = all.map((ep) => ep.peak_time);
  const tMin = times.length ? Math.min(...times) : 0;
  const tMax = times.length ? Math.max(...times) : 1;
  const span = tMax - tMin || 1;
  const innerWidth = width - MARGIN.left - MARGIN.right;
  const maxCount = Math.max(1, ...all.map((ep) => ep.alert_count));

  const bubbles: Bubble[] = all.map((ep) => ({
    episodeId: ep.episode_id,
    x: MARGIN.left + ((ep.peak_time - tMin) / span) * innerWidth,
    y: laneY.get(ep.stage) ?? 0,
    r: R_MIN + (R_MAX - R_MIN) * Math.sqrt(ep.alert_count / maxCount),
    color: heatColor(ep.heat),
    heat: ep.heat,
    stage: ep.stage,
    alertCount: ep.alert_count,
    critical: critical !== null && ep.episode_id === critical.episode_id,
  }));
  return { width, height, lanes, laneY, bubbles, tMin, tMax };
}

const SVG_NS = "http://www.w3.org/2000/svg";

function formatTime(epoch: number): string {
  return new Date(epoch * 1000).toISOString().replace("T", " ").slice(0, 19);
}

export function renderTimeline(svg: SVGSVGElement, layout: TimelineLayout): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));

  for (const stage of layout.lanes) {
    const y = layout.laneY.get(stage)!;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(MARGIN.left));
    line.setAttribute("x2", String(layout.width - MARGIN.right));
    line.setAttribute("y1", String(y));
    line.setAttribute("y2", String(y));
    line.setAttribute("class", "lane-line");
    svg.appendChild(line);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(MARGIN.left - 10));
    label.setAttribute("y", String(y + 4));
    label.setAttribute("text-anchor", "end");
    label.setAttribute("class", "lane-label");
    label.textContent = stage;
    svg.appendChild(label);
  }

  for (const t of [layout.tMin, layout.tMax]) {
    const label = document.createElementNS(SVG_NS, "text");
    const x = t === layout.tMin ? MARGIN.left : layout.width - MARGIN.right;
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(layout.height - 8));
    label.setAttribute("text-anchor", t === layout.tMin ? "start" : "end");
    label.setAttribute("class", "axis-label");
    label.textContent = formatTime(t);
    svg.appendChild(label);
  }

  for (const bubble of layout.bubbles) {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(bubble.x));
    circle.setAttribute("cy", String(bubble.y));
    circle.setAttribute("r", String(bubble.r));
    circle.setAttribute("fill", bubble.color);
    circle.setAttribute("fill-opacity", "0.82");
    circle.setAttribute("class", bubble.critical ? "bubble critical" : "bubble");
    circle.setAttribute("data-episode", bubble.episodeId);
    circle.setAttribute("data-heat", bubble.heat.toFixed(3));
    if (bubble.critical) {
      circle.setAttribute("stroke", "#111");
      circle.setAttribute("stroke-width", "2.5");
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent =
      `${bubble.episodeId}\nstage: ${bubble.stage}\nheat: ${bubble.heat.toFixed(2)}\n` +
      `alerts: ${bubble.alertCount}`;
    circle.appendChild(title);
    svg.appendChild(circle);
  }
}
