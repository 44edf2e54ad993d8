// Wire types mirroring the triage service's JSON payloads. The UI never
// derives heat or gain numbers itself; it displays what these carry.

export interface EpisodeRecord {
  episode_id: string;
  key: string;
  stage: string;
  peak_time: number;
  start_time: number;
  end_time: number;
  sources: string[];
  targets: string[];
  signatures: string[];
  dst_ports: number[];
  alert_ids: string[];
  alert_count: number;
}

export interface EpisodePage {
  total: number;
  page: number;
  page_size: number;
  episodes: EpisodeRecord[];
}

export interface IocRow {
  alert_id: string;
  timestamp: number;
  signature: string;
  src_ip: string;
  dst_ip: string;
  severity: number;
  stage: string;
  episode_id: string | null;
}

export interface IocPage {
  total: number;
  iocs: IocRow[];
}

export interface HacEpisode {
  episode_id: string;
  heat: number;
  stage: string;
  peak_time: number;
  alert_count: number;
  sources: string[];
  targets: string[];
  signatures: string[];
}

export interface HacPayload {
  ioc: { critical_alert_id: string; critical_episode_id: string };
  method: string;
  threshold: number;
  lookback: number | null;
  episodes: HacEpisode[];
}

export interface GainPayload {
  acg: number;
  nrg: number;
  coh: number | null;
  gain: number | null;
  hac_size: number;
  window_size: number;
  filtered: number;
  partial: boolean;
  ioc: { critical_alert_id: string; critical_episode_id: string };
  method: string;
  threshold: number;
  lookback: number | null;
}

export type HeatLevel = 0 | 1 | 2 | 3;

export interface LabelRecord {
  critical_episode_id: string;
  prior_episode_id: string;
  heat: HeatLevel;
  annotator: string;
  created_at: number;
}

export interface StatusPayload {
  workspace: string;
  labels: number;
  models: string[];
  active_model: string | null;
  corpus: { corpus_id: string; episodes: number } | null;
}

export interface ApiError {
  code: string;
  message: string;
}

export const HEAT_DESCRIPTIONS: Record<HeatLevel, string> = {
  0: "No relation to the critical event",
  1: "Reconnaissance that may have informed it",
  2: "Exploitation/access that enabled it",
  3: "Objective-level action directly tied to it",
};
