import type { TriageApi } from "./api.js";
import type { LabelQueue } from "./queue.js";
import { HEAT_DESCRIPTIONS, type EpisodeRecord, type HeatLevel, type IocRow } from "./types.js";

const HEAT_LEVELS: HeatLevel[] = [0, 1, 2, 3];

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

function formatTime(epoch: number): string {
  return new Date(epoch * 1000).toISOString().replace("T", " ").slice(0, 19);
}

/**
 * Episode labeling panel for one IoC: prior episodes nearest-first, a
 * 0-3 heat button row per episode (enabled once the episode has been
 * expanded at least once), a labeled/total progress indicator, and a
 * pending/retry badge fed by the label queue.
 */
export class LabelingView {
  private labeled = new Map<string, HeatLevel>();
  private expanded = new Set<string>();
  private critical: EpisodeRecord | null = null;
  private priors: EpisodeRecord[] = [];
  private progressEl: HTMLElement | null = null;

  constructor(
    private root: HTMLElement,
    private api: TriageApi,
    private queue: LabelQueue,
    private annotator = "analyst",
    private limit = 200,
  ) {}

  get labeledCount(): number {
    return this.labeled.size;
  }

  async show(ioc: IocRow): Promise<void> {
    this.labeled.clear();
    this.expanded.clear();
    this.root.innerHTML = "";
    if (!ioc.episode_id) {
      this.root.appendChild(el("div", "error-banner", "IoC has no resolved episode"));
      return;
    }
    try {
      this.critical = await this.api.episode(ioc.episode_id);
      const page = await this.api.episodes({ to: this.critical.peak_time, page_size: 10000 });
      this.priors = page.episodes
        .filter(
          (ep) =>
            ep.peak_time < this.critical!.peak_time && ep.episode_id !== this.critical!.episode_id,
        )
        .sort((a, b) => b.peak_time - a.peak_time)
        .slice(0, this.limit);
    } catch (err) {
      this.root.appendChild(
        el("div", "error-banner", `failed to load episodes: ${(err as Error).message}`),
      );
      return;
    }
    this.render(ioc);
  }

  private render(ioc: IocRow): void {
    const header = el("div", "label-header");
    header.appendChild(
      el(
        "div",
        "critical-summary",
        `Critical ${ioc.alert_id} — ${ioc.signature} — episode ${this.critical!.episode_id}` +
          ` [${this.critical!.stage}] at ${formatTime(this.critical!.peak_time)}`,
      ),
    );
    const legend = el("div", "heat-legend");
    for (const level of HEAT_LEVELS) {
      legend.appendChild(el("span", `legend-item heat-${level}`, `${level}: ${HEAT_DESCRIPTIONS[level]}`));
    }
    header.appendChild(legend);
    this.progressEl = el("div", "label-progress");
    header.appendChild(this.progressEl);
    this.root.appendChild(header);

    const list = el("div", "episode-list");
    for (const ep of this.priors) {
      list.appendChild(this.renderRow(ep));
    }
    if (!this.priors.length) {
      list.appendChild(el("div", "empty-state", "No prior episodes in the window."));
    }
    this.root.appendChild(list);
    this.updateProgress();
  }

  private renderRow(ep: EpisodeRecord): HTMLElement {
    const row = el("div", "episode-row");
    row.dataset.episode = ep.episode_id;

    const summary = el("div", "episode-summary");
    const expandBtn = el("button", "expand-btn", "▸ details");
    const detail = el("div", "episode-detail");
    detail.hidden = true;

    summary.appendChild(expandBtn);
    summary.appendChild(
      el(
        "span",
        "episode-meta",
        `${formatTime(ep.peak_time)}  ${ep.stage}  ·  ${ep.alert_count} alerts  ·  ${ep.episode_id}`,
      ),
    );

    const buttons = el("span", "heat-buttons");
    const heatButtons: HTMLButtonElement[] = [];
    for (const level of HEAT_LEVELS) {
      const btn = el("button", `heat-btn heat-${level}`, String(level));
      btn.title = HEAT_DESCRIPTIONS[level];
      btn.disabled = true; // enabled after first expand: grade only what you've looked at
      btn.addEventListener("click", () => this.assign(ep, level, row));
      heatButtons.push(btn);
      buttons.appendChild(btn);
    }
    summary.appendChild(buttons);

    expandBtn.addEventListener("click", () => {
      detail.hidden = !detail.hidden;
      expandBtn.textContent = detail.hidden ? "▸ details" : "▾ details";
      if (!this.expanded.has(ep.episode_id)) {
        this.expanded.add(ep.episode_id);
        for (const btn of heatButtons) btn.disabled = false;
      }
    });

    const lines: Array<[string, string]> = [
      ["sources", ep.sources.join(", ")],
      ["targets", ep.targets.join(", ")],
      ["signatures", ep.signatures.join(" | ")],
      ["ports", ep.dst_ports.join(", ") || "-"],
      ["span", `${formatTime(ep.start_time)} .. ${formatTime(ep.end_time)}`],
    ];
    for (const [name, value] of lines) {
      const line = el("div", "detail-line");
      line.appendChild(el("span", "detail-name", name));
      line.appendChild(el("span", "detail-value", value));
      detail.appendChild(line);
    }

    row.appendChild(summary);
    row.appendChild(detail);
    return row;
  }

  private assign(ep: EpisodeRecord, level: HeatLevel, row: HTMLElement): void {
    this.labeled.set(ep.episode_id, level);
    row.classList.add("labeled");
    row.querySelectorAll(".heat-btn").forEach((btn) => {
      btn.classList.toggle("selected", btn.textContent === String(level));
    });
    this.queue.add({
      critical_episode_id: this.critical!.episode_id,
      prior_episode_id: ep.episode_id,
      heat: level,
      annotator: this.annotator,
      created_at: Date.now() / 1000,
    });
    this.updateProgress();
  }

  private updateProgress(): void {
    if (this.progressEl) {
      this.progressEl.textContent = `labeled ${this.labeled.size} / ${this.priors.length}`;
    }
  }
}
