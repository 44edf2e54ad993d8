import type { TriageApi } from "./api.js";
import { filterByThreshold } from "./heat.js";
import { criticalAsHacEpisode, layoutTimeline, renderTimeline } from "./timeline.js";
import type { EpisodeRecord, GainPayload, HacPayload, IocRow } from "./types.js";

const BASELINE_METHODS = ["src-match", "tgt-match", "src-and-tgt-match"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function gainLine(gain: GainPayload): string {
  const fmt = (v: number | null) => (v === null ? "n/a" : v.toFixed(3));
  const partial = gain.partial ? "  (partial: no training labels)" : "";
  return (
    `gain ${fmt(gain.gain)} = acg ${fmt(gain.acg)} + nrg ${fmt(gain.nrg)} - coh ${fmt(gain.coh)}` +
    `  ·  ${gain.hac_size}/${gain.window_size} episodes${partial}`
  );
}

/**
 * Campaign timeline: model-heated bubbles filtered client-side by the
 * threshold slider (over a threshold-0 fetch), with gain numbers taken
 * verbatim from the service at the slider's value, and an optional
 * side-by-side baseline chart.
 */
export class TimelineView {
  threshold = 0.5;
  private baseline: string | null = null;
  private hac: HacPayload | null = null;
  private critical: EpisodeRecord | null = null;
  private ioc: IocRow | null = null;
  private lookback: number | undefined;
  private gainTimer: ReturnType<typeof setTimeout> | null = null;

  private controls = el("div", "timeline-controls");
  private heatPane = el("div", "chart-pane");
  private baselinePane = el("div", "chart-pane");
  private thresholdLabel = el("span", "threshold-value");

  constructor(
    private root: HTMLElement,
    private api: TriageApi,
  ) {}

  async show(ioc: IocRow, lookback?: number): Promise<void> {
    this.ioc = ioc;
    this.lookback = lookback;
    this.root.innerHTML = "";
    this.root.appendChild(this.controls);
    const charts = el("div", "charts");
    charts.appendChild(this.heatPane);
    charts.appendChild(this.baselinePane);
    this.root.appendChild(charts);
    this.renderControls();
    try {
      // threshold-0 fetch: the slider refilters client-side
      this.hac = await this.api.hac(ioc.alert_id, { threshold: 0, lookback });
      this.critical = await this.api.episode(this.hac.ioc.critical_episode_id);
    } catch (err) {
      this.heatPane.innerHTML = "";
      this.heatPane.appendChild(
        el("div", "error-banner", `failed to load campaign: ${(err as Error).message}`),
      );
      return;
    }
    this.renderHeatChart();
    void this.refreshGain();
    await this.renderBaseline();
  }

  private renderControls(): void {
    this.controls.innerHTML = "";
    const label = el("label", "slider-label", "heat threshold ");
    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "0";
    slider.max = "3";
    slider.step = "0.1";
    slider.value = String(this.threshold);
    slider.addEventListener("input", () => {
      this.threshold = Number(slider.value);
      this.thresholdLabel.textContent = this.threshold.toFixed(1);
      this.renderHeatChart();
      this.scheduleGainRefresh();
    });
    this.thresholdLabel.textContent = this.threshold.toFixed(1);
    label.appendChild(slider);
    label.appendChild(this.thresholdLabel);
    this.controls.appendChild(label);

    const select = el("select") as HTMLSelectElement;
    const none = el("option", undefined, "no baseline");
    none.setAttribute("value", "");
    select.appendChild(none);
    for (const method of BASELINE_METHODS) {
      const opt = el("option", undefined, method);
      opt.setAttribute("value", method);
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      this.baseline = select.value || null;
      void this.renderBaseline();
    });
    const baselineLabel = el("label", "baseline-label", "compare against ");
    baselineLabel.appendChild(select);
    this.controls.appendChild(baselineLabel);
  }

  private renderHeatChart(): void {
    if (!this.hac) return;
    const visible = filterByThreshold(this.hac.episodes, this.threshold);
    this.renderChart(this.heatPane, "heat-model", visible, this.hac);
  }

  private async renderBaseline(): Promise<void> {
    this.baselinePane.innerHTML = "";
    if (!this.baseline || !this.ioc) return;
    try {
      const hac = await this.api.hac(this.ioc.alert_id, {
        method: this.baseline,
        lookback: this.lookback,
      });
      this.renderChart(this.baselinePane, this.baseline, hac.episodes, hac);
      const gain = await this.api.gain(this.ioc.alert_id, {
        method: this.baseline,
        lookback: this.lookback,
      });
      this.setGainLine(this.baselinePane, gain);
    } catch (err) {
      this.baselinePane.appendChild(
        el("div", "error-banner", `baseline failed: ${(err as Error).message}`),
      );
    }
  }

  private renderChart(
    pane: HTMLElement,
    title: string,
    episodes: HacPayload["episodes"],
    hac: HacPayload,
  ): void {
    pane.innerHTML = "";
    pane.appendChild(el("h3", "chart-title", title));
    pane.appendChild(el("div", "gain-line", "…"));
    if (!episodes.length) {
      pane.appendChild(
        el(
          "div",
          "empty-state",
          `No episodes above the threshold (window held ${hac.episodes.length}).`,
        ),
      );
      return;
    }
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    const layout = layoutTimeline(
      episodes,
      this.critical ? criticalAsHacEpisode(this.critical) : null,
    );
    renderTimeline(svg, layout);
    pane.appendChild(svg);
  }

  private setGainLine(pane: HTMLElement, gain: GainPayload): void {
    const line = pane.querySelector(".gain-line");
    if (line) line.textContent = gainLine(gain);
  }

  private scheduleGainRefresh(): void {
    if (this.gainTimer) clearTimeout(this.gainTimer);
    this.gainTimer = setTimeout(() => void this.refreshGain(), 250);
  }

  private async refreshGain(): Promise<void> {
    if (!this.ioc) return;
    try {
      const gain = await this.api.gain(this.ioc.alert_id, {
        threshold: this.threshold,
        lookback: this.lookback,
      });
      this.setGainLine(this.heatPane, gain);
    } catch (err) {
      const line = this.heatPane.querySelector(".gain-line");
      if (line) line.textContent = `gain unavailable: ${(err as Error).message}`;
    }
  }
}
