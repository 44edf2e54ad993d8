import { TriageApi } from "./api.js";
import { LabelingView } from "./labeling.js";
import { LabelQueue, type QueueState } from "./queue.js";
import { TimelineView } from "./timelineView.js";
import type { IocRow } from "./types.js";

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

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.localStorage.getItem("heattriage.api") ?? "http://127.0.0.1:8472";
}

export function mountApp(root: HTMLElement): void {
  const api = new TriageApi(apiBase());
  const badge = el("span", "queue-badge");
  const queue = new LabelQueue(
    (labels) => api.postLabels(labels),
    (state: QueueState) => {
      badge.textContent = state.pending
        ? `${state.pending} label(s) pending${state.lastError ? " — " + state.lastError : ""}`
        : "";
      badge.classList.toggle("has-error", Boolean(state.lastError));
      retryBtn.hidden = !(state.pending && state.lastError && !state.flushing);
    },
  );
  const retryBtn = el("button", "retry-btn", "retry");
  retryBtn.hidden = true;
  retryBtn.addEventListener("click", () => void queue.retry());

  const header = el("header", "app-header");
  header.appendChild(el("h1", undefined, "heattriage"));
  const statusEl = el("span", "status-line", "connecting…");
  header.appendChild(statusEl);
  header.appendChild(badge);
  header.appendChild(retryBtn);
  root.appendChild(header);

  const picker = el("div", "ioc-picker");
  const search = el("input") as HTMLInputElement;
  search.placeholder = "search signature, e.g. Outbound";
  const searchBtn = el("button", undefined, "find IoCs");
  const results = el("div", "ioc-results");
  picker.appendChild(search);
  picker.appendChild(searchBtn);
  picker.appendChild(results);
  root.appendChild(picker);

  const tabs = el("div", "tabs");
  const labelTab = el("button", "tab", "Label episodes");
  const timelineTab = el("button", "tab", "Campaign timeline");
  tabs.appendChild(labelTab);
  tabs.appendChild(timelineTab);
  tabs.hidden = true;
  root.appendChild(tabs);

  const panel = el("main", "panel");
  root.appendChild(panel);

  const labeling = new LabelingView(panel, api, queue);
  const timeline = new TimelineView(panel, api);
  let currentIoc: IocRow | null = null;
  let activeTab: "label" | "timeline" = "label";

  function setTab(tab: "label" | "timeline"): void {
    activeTab = tab;
    labelTab.classList.toggle("active", tab === "label");
    timelineTab.classList.toggle("active", tab === "timeline");
    if (!currentIoc) return;
    panel.innerHTML = "";
    if (tab === "label") void labeling.show(currentIoc);
    else void timeline.show(currentIoc);
  }

  labelTab.addEventListener("click", () => setTab("label"));
  timelineTab.addEventListener("click", () => setTab("timeline"));

  async function runSearch(): Promise<void> {
    results.innerHTML = "";
    try {
      const page = await api.iocs(search.value || undefined, undefined, 25);
      if (!page.iocs.length) {
        results.appendChild(el("div", "empty-state", "no matching alerts"));
        return;
      }
      for (const row of page.iocs) {
        const item = el(
          "button",
          "ioc-item",
          `${row.alert_id} · sev ${row.severity} · [${row.stage}] ${row.signature}`,
        );
        item.addEventListener("click", () => {
          currentIoc = row;
          tabs.hidden = false;
          setTab(activeTab);
        });
        results.appendChild(item);
      }
    } catch (err) {
      results.appendChild(el("div", "error-banner", (err as Error).message));
    }
  }

  searchBtn.addEventListener("click", () => void runSearch());
  search.addEventListener("keydown", (ev) => {
    if ((ev as KeyboardEvent).key === "Enter") void runSearch();
  });

  void api
    .status()
    .then((status) => {
      statusEl.textContent = status.corpus
        ? `corpus ${status.corpus.corpus_id} · ${status.corpus.episodes} episodes · model ${status.active_model ?? "none"}`
        : "no corpus ingested yet";
    })
    .catch((err) => {
      statusEl.textContent = `service unreachable: ${(err as Error).message}`;
      statusEl.classList.add("has-error");
    });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!);
}
