"""Campaign extraction: heat all prior episodes for an IoC and keep the hot ones.

Also provides the three rule-based baselines that corroborate evidence by
source/target IP matching, which is what an analyst would do by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from .episodes import Episode, EpisodeStore
from .errors import AmbiguousIocError, NotFoundError, ValidationError
from .model import HeatModel

METHOD_HEAT_MODEL = "heat-model"
BASELINE_METHODS = ("src-match", "tgt-match", "src-and-tgt-match")

# Baselines have membership-only semantics; every matched episode gets the
# objective-level heat so downstream scoring treats them uniformly.
BASELINE_NOMINAL_HEAT = 3.0


@dataclass(frozen=True)
class Ioc:
    critical_alert_id: str
    critical_episode_id: str

    def to_dict(self) -> dict:
        return {
            "critical_alert_id": self.critical_alert_id,
            "critical_episode_id": self.critical_episode_id,
        }


@dataclass(frozen=True)
class Hac:
    """Prior episodes judged part of the IoC's campaign, with their heats."""

    ioc: Ioc
    method: str
    lookback_seconds: float | None
    threshold: float
    heated: tuple[tuple[str, float], ...]  # (episode_id, heat), peak-time ascending

    @property
    def episode_ids(self) -> list[str]:
        return [eid for eid, _ in self.heated]

    def __len__(self) -> int:
        return len(self.heated)


def resolve_ioc(
    store: EpisodeStore,
    alert_id: str | None = None,
    signature: str | None = None,
    timestamp: float | None = None,
    src_ip: str | None = None,
    dst_ip: str | None = None,
) -> Ioc:
    """Locate the unique critical alert and the episode containing it.

    Either ``alert_id`` or a (signature, timestamp[, src/dst]) tuple must be
    given; the latter must match exactly one alert.
    """
    if alert_id is not None:
        if store.alerts and alert_id not in store.alerts:
            raise NotFoundError(f"unknown alert {alert_id!r}")
        episode = store.episode_containing(alert_id)
        return Ioc(alert_id, episode.episode_id)
    if signature is None or timestamp is None:
        raise ValidationError("ioc query needs an alert id, or a signature and timestamp")
    if not store.alerts:
        raise ValidationError("alert-attribute ioc queries need a store with alerts loaded")
    matches = [
        a
        for a in store.alerts.values()
        if a.signature == signature
        and a.timestamp == timestamp
        and (src_ip is None or a.src_ip == src_ip)
        and (dst_ip is None or a.dst_ip == dst_ip)
    ]
    if not matches:
        raise NotFoundError(f"no alert matches signature={signature!r} at t={timestamp}")
    if len(matches) > 1:
        ids = sorted(a.id for a in matches)
        raise AmbiguousIocError(f"{len(matches)} alerts match the ioc query: {ids}", ids)
    return Ioc(matches[0].id, store.episode_containing(matches[0].id).episode_id)


def _candidate_window(ioc: Ioc, store: EpisodeStore, lookback_seconds: float | None) -> list[Episode]:
    critical = store.get(ioc.critical_episode_id)
    return store.prior_episodes(critical.peak_time, lookback_seconds)


def extract_hac(
    ioc: Ioc,
    model: HeatModel,
    store: EpisodeStore,
    lookback_seconds: float | None = None,
    threshold: float = 0.5,
) -> Hac:
    """Heat every prior episode in the lookback window; keep those above threshold."""
    if threshold < 0:
        raise ValidationError("threshold must be >= 0")
    critical = store.get(ioc.critical_episode_id)
    candidates = _candidate_window(ioc, store, lookback_seconds)
    heats = model.predict_pairs([(ep, critical) for ep in candidates])
    heated = tuple(
        (ep.episode_id, float(h)) for ep, h in zip(candidates, heats) if h > threshold
    )
    return Hac(ioc, METHOD_HEAT_MODEL, lookback_seconds, threshold, heated)


def extract_baseline(
    ioc: Ioc,
    store: EpisodeStore,
    method: str,
    lookback_seconds: float | None = None,
) -> Hac:
    """Rule-based campaign: keep prior episodes whose IPs intersect the critical's."""
    if method not in BASELINE_METHODS:
        raise ValidationError(f"unknown baseline method {method!r}")
    critical = store.get(ioc.critical_episode_id)
    heated = []
    for ep in _candidate_window(ioc, store, lookback_seconds):
        src_hit = bool(ep.sources & critical.sources)
        tgt_hit = bool(ep.targets & critical.targets)
        keep = (
            src_hit
            if method == "src-match"
            else tgt_hit
            if method == "tgt-match"
            else (src_hit and tgt_hit)
        )
        if keep:
            heated.append((ep.episode_id, BASELINE_NOMINAL_HEAT))
    return Hac(ioc, method, lookback_seconds, 0.0, tuple(heated))


def hac_payload(hac: Hac, store: EpisodeStore) -> dict:
    """JSON-exportable view of a campaign, one entry per heated episode."""
    episodes = []
    for eid, heat in hac.heated:
        ep = store.get(eid)
        episodes.append(
            {
                "episode_id": eid,
                "heat": heat,
                "stage": ep.stage,
                "peak_time": ep.peak_time,
                "alert_count": ep.alert_count,
                "sources": sorted(ep.sources),
                "targets": sorted(ep.targets),
                "signatures": sorted(ep.signatures),
            }
        )
    return {
        "ioc": hac.ioc.to_dict(),
        "method": hac.method,
        "threshold": hac.threshold,
        "lookback": hac.lookback_seconds,
        "episodes": episodes,
    }


def window_size(ioc: Ioc, store: EpisodeStore, lookback_seconds: float | None = None) -> int:
    return len(_candidate_window(ioc, store, lookback_seconds))
