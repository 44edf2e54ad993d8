"""Episode aggregation: smoothed alert-volume peaks per (key, stage).

Alerts sharing an aggregation key and stage are binned into a time
histogram, low-pass filtered with a Gaussian kernel sized by the stage's
expected action duration, and cut into episodes at the local minima
around each smoothed peak.  Every alert lands in exactly one episode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .alerts import Alert, AsnTable, KeyId, KeyMode, StageId, StageVocabulary, resolve_aggregation_key
from .errors import NotFoundError, ValidationError


@dataclass(frozen=True)
class Episode:
    """A group of alerts from one key and stage, bounded by volume minima."""

    episode_id: str
    key: KeyId
    stage: StageId
    peak_time: float
    start_time: float
    end_time: float
    sources: frozenset[str]
    targets: frozenset[str]
    signatures: frozenset[str]
    dst_ports: frozenset[int]
    alert_ids: frozenset[str]
    alert_count: int

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "key": self.key,
            "stage": self.stage,
            "peak_time": self.peak_time,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "sources": sorted(self.sources),
            "targets": sorted(self.targets),
            "signatures": sorted(self.signatures),
            "dst_ports": sorted(self.dst_ports),
            "alert_ids": sorted(self.alert_ids),
            "alert_count": self.alert_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Episode":
        return cls(
            episode_id=d["episode_id"],
            key=d["key"],
            stage=d["stage"],
            peak_time=float(d["peak_time"]),
            start_time=float(d["start_time"]),
            end_time=float(d["end_time"]),
            sources=frozenset(d["sources"]),
            targets=frozenset(d["targets"]),
            signatures=frozenset(d["signatures"]),
            dst_ports=frozenset(int(p) for p in d["dst_ports"]),
            alert_ids=frozenset(d["alert_ids"]),
            alert_count=int(d["alert_count"]),
        )


@dataclass(frozen=True)
class SmoothingConfig:
    bin_width: float = 60.0
    truncation: float = 3.0

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValidationError("bin_width must be > 0")
        if not self.truncation >= 1:
            raise ValidationError("kernel truncation must be >= 1 sigma")

    def sigma_bins(self, vocab: StageVocabulary, stage: StageId) -> float:
        return vocab.smoothing_seconds(stage) / self.bin_width


@dataclass(frozen=True)
class Histogram:
    """Contiguous fixed-width time bins; ``counts[i]`` covers
    ``[t0 + i*bin_width, t0 + (i+1)*bin_width)``."""

    t0: float
    bin_width: float
    counts: np.ndarray

    def bin_center(self, i: int) -> float:
        return self.t0 + (i + 0.5) * self.bin_width

    def bin_of(self, timestamp: float) -> int:
        return int((timestamp - self.t0) // self.bin_width)


def build_histogram(alerts: Sequence[Alert], key: KeyId, stage: StageId, cfg: SmoothingConfig) -> Histogram:
    """Alert-volume histogram for one (key, stage) group, edges aligned to bin_width."""
    if not alerts:
        raise ValidationError(f"no alerts for key={key!r} stage={stage!r}")
    w = cfg.bin_width
    times = np.array([a.timestamp for a in alerts], dtype=np.float64)
    first = math.floor(times.min() / w)
    last = math.floor(times.max() / w)
    counts = np.zeros(last - first + 1, dtype=np.int64)
    idx = np.floor(times / w).astype(np.int64) - first
    np.add.at(counts, idx, 1)
    return Histogram(t0=first * w, bin_width=w, counts=counts)


def gaussian_smooth(series: np.ndarray, sigma_bins: float, truncation: float = 3.0) -> np.ndarray:
    """Convolve with a renormalized, truncated Gaussian kernel (zero-padded edges)."""
    if not sigma_bins > 0:
        raise ValidationError("sigma_bins must be > 0")
    series = np.asarray(series, dtype=np.float64)
    radius = max(1, int(math.ceil(truncation * sigma_bins)))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma_bins) ** 2)
    kernel /= kernel.sum()
    # Centered slice of the full convolution; mode="same" would return the
    # kernel's length whenever the series is shorter than the kernel.
    full = np.convolve(series, kernel)
    return full[radius : radius + len(series)]


def _local_maxima(s: np.ndarray) -> list[int]:
    """Peak bins: s[i] > s[i-1] and s[i] >= s[i+1], boundaries below everything.

    The leftmost bin of a plateau wins; a single-bin series is one peak.
    """
    n = len(s)
    peaks = []
    for i in range(n):
        left = s[i - 1] if i > 0 else -math.inf
        right = s[i + 1] if i < n - 1 else -math.inf
        if s[i] > left and s[i] >= right:
            peaks.append(i)
    return peaks


def _split_bins(s: np.ndarray, peaks: list[int]) -> list[int]:
    """Boundary bin between each pair of adjacent peaks: the (leftmost) minimum."""
    splits = []
    for a, b in zip(peaks, peaks[1:]):
        between = s[a + 1 : b]
        splits.append(a + 1 + int(np.argmin(between)))
    return splits


def segment_episodes(
    hist: Histogram,
    smoothed: np.ndarray,
    alerts: Sequence[Alert],
    key: KeyId,
    stage: StageId,
) -> list[Episode]:
    """Cut one (key, stage) group into episodes at the minima between smoothed peaks.

    ``alerts`` must be time-sorted.  Alerts in a shared boundary bin belong to
    the earlier episode, so the episodes partition the group exactly.
    """
    if len(smoothed) != len(hist.counts):
        raise ValidationError("raw and smoothed series must be aligned")
    peaks = _local_maxima(smoothed)
    splits = _split_bins(smoothed, peaks)
    # Episode k covers bins (splits[k-1], splits[k]]; the first starts at bin 0,
    # the last ends at the final bin.
    uppers = splits + [len(hist.counts) - 1]
    episodes: list[Episode] = []
    lo = 0
    a_idx = 0
    for ordinal, hi in enumerate(uppers):
        members: list[Alert] = []
        while a_idx < len(alerts) and hist.bin_of(alerts[a_idx].timestamp) <= hi:
            members.append(alerts[a_idx])
            a_idx += 1
        if not members:
            lo = hi + 1
            continue
        raw = hist.counts[lo : hi + 1]
        peak_bin = lo + int(np.argmax(raw))
        start = members[0].timestamp
        end = members[-1].timestamp
        peak = min(max(hist.bin_center(peak_bin), start), end)
        episodes.append(
            Episode(
                episode_id=f"{key}~{stage}~{ordinal}",
                key=key,
                stage=stage,
                peak_time=peak,
                start_time=start,
                end_time=end,
                sources=frozenset(a.src_ip for a in members),
                targets=frozenset(a.dst_ip for a in members),
                signatures=frozenset(a.signature for a in members),
                dst_ports=frozenset(a.dst_port for a in members if a.dst_port is not None),
                alert_ids=frozenset(a.id for a in members),
                alert_count=len(members),
            )
        )
        lo = hi + 1
    return episodes


class EpisodeStore:
    """All episodes of a corpus, globally ordered by peak time."""

    def __init__(self, episodes: Iterable[Episode], alerts: Iterable[Alert] | None = None):
        self.episodes: list[Episode] = sorted(
            episodes, key=lambda e: (e.peak_time, e.key, e.stage, e.episode_id)
        )
        self.by_id: dict[str, Episode] = {}
        self.by_key_stage: dict[tuple[KeyId, StageId], list[Episode]] = {}
        self.episode_of_alert: dict[str, str] = {}
        for ep in self.episodes:
            if ep.episode_id in self.by_id:
                raise ValidationError(f"duplicate episode id {ep.episode_id!r}")
            self.by_id[ep.episode_id] = ep
            self.by_key_stage.setdefault((ep.key, ep.stage), []).append(ep)
            for aid in ep.alert_ids:
                if aid in self.episode_of_alert:
                    raise ValidationError(f"alert {aid!r} assigned to two episodes")
                self.episode_of_alert[aid] = ep.episode_id
        self.alerts: dict[str, Alert] = {a.id: a for a in alerts} if alerts is not None else {}

    def __len__(self) -> int:
        return len(self.episodes)

    def get(self, episode_id: str) -> Episode:
        try:
            return self.by_id[episode_id]
        except KeyError:
            raise NotFoundError(f"unknown episode {episode_id!r}") from None

    def episode_containing(self, alert_id: str) -> Episode:
        try:
            return self.by_id[self.episode_of_alert[alert_id]]
        except KeyError:
            raise NotFoundError(f"no episode contains alert {alert_id!r}") from None

    def prior_episodes(self, peak_time: float, lookback_seconds: float | None = None) -> list[Episode]:
        """Episodes peaking strictly before ``peak_time`` and within the lookback."""
        floor_t = -math.inf if lookback_seconds is None else peak_time - lookback_seconds
        return [e for e in self.episodes if floor_t <= e.peak_time < peak_time]

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ep in self.episodes:
                fh.write(json.dumps(ep.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load_jsonl(cls, path, alerts: Iterable[Alert] | None = None) -> "EpisodeStore":
        episodes = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    episodes.append(Episode.from_dict(json.loads(line)))
        return cls(episodes, alerts)


def build_all_episodes(
    alerts: Sequence[Alert],
    vocab: StageVocabulary | None = None,
    cfg: SmoothingConfig | None = None,
    mode: KeyMode = "ip",
    asn_table: AsnTable | None = None,
) -> EpisodeStore:
    """Segment a whole corpus into episodes, grouped by (aggregation key, stage)."""
    vocab = vocab or StageVocabulary.default()
    cfg = cfg or SmoothingConfig()
    groups: dict[tuple[KeyId, StageId], list[Alert]] = {}
    for alert in alerts:
        key = resolve_aggregation_key(alert, mode, asn_table)
        groups.setdefault((key, alert.stage), []).append(alert)
    episodes: list[Episode] = []
    for (key, stage), members in groups.items():
        members.sort(key=lambda a: (a.timestamp, a.id))
        hist = build_histogram(members, key, stage, cfg)
        smoothed = gaussian_smooth(hist.counts, cfg.sigma_bins(vocab, stage), cfg.truncation)
        episodes.extend(segment_episodes(hist, smoothed, members, key, stage))
    return EpisodeStore(episodes, alerts)
