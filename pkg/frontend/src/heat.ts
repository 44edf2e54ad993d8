import type { HacEpisode } from "./types.js";

// Heat color ramp: grey -> green -> yellow -> red over heat 0 -> 3.
const STOPS: Array<[number, [number, number, number]]> = [
  [0, [154, 160, 166]], // grey
  [1, [52, 168, 83]], // green
  [2, [249, 171, 0]], // yellow
  [3, [234, 67, 53]], // red
];

export function heatColor(heat: number): string {
  const h = Math.min(3, Math.max(0, heat));
  for (let i = 0; i < STOPS.length - 1; i++) {
    const [h0, c0] = STOPS[i];
    const [h1, c1] = STOPS[i + 1];
    if (h <= h1) {
      const t = (h - h0) / (h1 - h0);
      const mix = c0.map((v, k) => Math.round(v + t * (c1[k] - v)));
      return `rgb(${mix[0]}, ${mix[1]}, ${mix[2]})`;
    }
  }
  const last = STOPS[STOPS.length - 1][1];
  return `rgb(${last[0]}, ${last[1]}, ${last[2]})`;
}

/**
 * Client-side view of the service's threshold rule (strictly greater-than).
 * The service's threshold monotonicity contract makes filtering a
 * threshold-0 fetch equivalent to refetching at the slider value.
 */
export function filterByThreshold(episodes: HacEpisode[], threshold: number): HacEpisode[] {
  return episodes.filter((ep) => ep.heat > threshold);
}
