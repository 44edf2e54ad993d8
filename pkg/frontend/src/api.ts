import type {
  EpisodePage,
  EpisodeRecord,
  GainPayload,
  HacPayload,
  IocPage,
  LabelRecord,
  StatusPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface HacQuery {
  model?: string;
  threshold?: number;
  lookback?: number;
  method?: string;
}

/** Thin typed client for the triage service; all numbers shown in the UI come from here. */
export class TriageApi {
  constructor(
    private base: string,
    private token?: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const code = typeof body.code === "string" ? body.code : "error";
      const message = typeof body.message === "string" ? body.message : `HTTP ${response.status}`;
      throw new ApiRequestError(response.status, code, message);
    }
    return body as T;
  }

  private query(params: Record<string, string | number | undefined>): string {
    const pairs = Object.entries(params).filter(([, v]) => v !== undefined && v !== "");
    if (!pairs.length) return "";
    const search = new URLSearchParams();
    for (const [k, v] of pairs) search.set(k, String(v));
    return `?${search.toString()}`;
  }

  status(): Promise<StatusPayload> {
    return this.request("/status", { headers: this.headers() });
  }

  iocs(signature?: string, severity?: number, limit = 50): Promise<IocPage> {
    return this.request(`/iocs${this.query({ signature, severity, limit })}`, {
      headers: this.headers(),
    });
  }

  episode(episodeId: string): Promise<EpisodeRecord> {
    return this.request(`/episodes/${encodeURIComponent(episodeId)}`, {
      headers: this.headers(),
    });
  }

  episodes(opts: {
    key?: string;
    stage?: string;
    from?: number;
    to?: number;
    page?: number;
    page_size?: number;
  }): Promise<EpisodePage> {
    return this.request(`/episodes${this.query(opts)}`, { headers: this.headers() });
  }

  hac(iocAlertId: string, opts: HacQuery = {}): Promise<HacPayload> {
    return this.request(`/hac/${encodeURIComponent(iocAlertId)}${this.query({ ...opts })}`, {
      headers: this.headers(),
    });
  }

  gain(iocAlertId: string, opts: HacQuery = {}): Promise<GainPayload> {
    return this.request(`/gain/${encodeURIComponent(iocAlertId)}${this.query({ ...opts })}`, {
      headers: this.headers(),
    });
  }

  labels(): Promise<{ total: number; labels: LabelRecord[] }> {
    return this.request("/labels", { headers: this.headers() });
  }

  postLabels(labels: LabelRecord[]): Promise<{ added: number; total: number }> {
    return this.request("/labels", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ labels }),
    });
  }
}
