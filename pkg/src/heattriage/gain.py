"""Entropy-based campaign gain: coverage, noise reduction, coherence.

A useful campaign covers diverse attack stages (high stage entropy), filters
out most of the episodes an analyst would otherwise wade through, and grades
episodes the way the analyst graded the training set.  The three components
combine into a single gain used to rank campaigns across candidate IoCs:

    gain = acg + nrg - coh

* ``acg``  - entropy of the campaign's stage distribution.
* ``nrg``  - stage entropy of the whole lookback window minus the entropy of
  the campaign's stages extended with one collective symbol for everything
  filtered out; filtering a big noisy window down to a focused campaign makes
  this large.
* ``coh``  - absolute difference between "how heat determines stage" in the
  campaign (conditional entropy of stage given quantized heat) and the same
  quantity over the analyst's training labels; 0 means the model grades
  episodes like the analyst does.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .episodes import EpisodeStore
from .errors import ValidationError
from .hac import Hac, Ioc, extract_hac, window_size, _candidate_window
from .model import HeatModel

# StageDistribution symbol for all window episodes the campaign filtered out.
FILTERED_SYMBOL = "__filtered__"


def quantize_heat(heat: float) -> int:
    """Nearest integer heat level in {0..3}; halves round up."""
    return int(min(3, max(0, math.floor(heat + 0.5))))


@dataclass
class StageDistribution:
    """Counts of episodes per attack stage (plus optional filtered symbol)."""

    counts: dict[str, int]

    @classmethod
    def from_stages(cls, stages: Iterable[str]) -> "StageDistribution":
        return cls(dict(Counter(stages)))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def with_filtered(self, filtered_count: int) -> "StageDistribution":
        counts = dict(self.counts)
        if filtered_count > 0:
            counts[FILTERED_SYMBOL] = counts.get(FILTERED_SYMBOL, 0) + filtered_count
        return StageDistribution(counts)


def entropy(dist: StageDistribution | Mapping[str, float] | Sequence[float], base: float) -> float:
    """Shannon entropy in the given log base; empty distributions have entropy 0."""
    if base < 2:
        raise ValidationError("entropy base must be >= 2")
    if isinstance(dist, StageDistribution):
        values = list(dist.counts.values())
    elif isinstance(dist, Mapping):
        values = list(dist.values())
    else:
        values = list(dist)
    counts = [float(c) for c in values if c > 0]
    if not counts:
        return 0.0
    # Equal counts reduce to log_b(n) exactly (so uniform over `base` symbols
    # is exactly 1.0); the general count form avoids forming tiny ratios.
    if all(c == counts[0] for c in counts):
        return math.log(len(counts)) / math.log(base)
    total = math.fsum(counts)
    h = (math.log(total) - math.fsum(c * math.log(c) for c in counts) / total) / math.log(base)
    return max(h, 0.0)


def conditional_entropy(pairs: Sequence[tuple[str, int]], base: float) -> float:
    """Empirical H(stage | heat level) in the given log base."""
    if base < 2:
        raise ValidationError("entropy base must be >= 2")
    if not pairs:
        raise ValidationError("conditional_entropy needs at least one (stage, heat) pair")
    joint = Counter(pairs)
    marginal = Counter(y for _, y in pairs)
    n = len(pairs)
    h = (
        math.fsum(c * math.log(c) for c in marginal.values())
        - math.fsum(c * math.log(c) for c in joint.values())
    ) / (n * math.log(base))
    return max(h, 0.0)


@dataclass
class GainConfig:
    include_critical: bool = True
    # Log base for the filtered-extended distribution: stage-alphabet size by
    # default so the noise term is on the same scale as the window entropy.
    extended_base_includes_filtered: bool = False
    acg_threshold: float = 0.4


@dataclass
class GainReport:
    acg: float
    nrg: float
    coh: float | None
    gain: float | None
    hac_size: int
    window_size: int
    filtered: int
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            "acg": self.acg,
            "nrg": self.nrg,
            "coh": self.coh,
            "gain": self.gain,
            "hac_size": self.hac_size,
            "window_size": self.window_size,
            "filtered": self.filtered,
            "partial": self.partial,
        }


def compute_gain(
    hac: Hac,
    store: EpisodeStore,
    training_pairs: Sequence[tuple[str, int]],
    n_stages: int,
    config: GainConfig | None = None,
) -> GainReport:
    """Score one campaign against its lookback window and the analyst's labels.

    The critical episode counts as part of the campaign (heat level 3) and of
    the window unless ``config.include_critical`` is off, in which case it is
    left out of both sides.
    """
    config = config or GainConfig()
    base = float(n_stages)

    window = _candidate_window(hac.ioc, store, hac.lookback_seconds)
    window_ids = {ep.episode_id for ep in window}
    missing = [eid for eid, _ in hac.heated if eid not in window_ids]
    if missing:
        raise ValidationError(f"hac episodes outside the lookback window: {missing}")

    hac_pairs: list[tuple[str, int]] = [
        (store.get(eid).stage, quantize_heat(heat)) for eid, heat in hac.heated
    ]
    window_stages = [ep.stage for ep in window]
    if config.include_critical:
        critical = store.get(hac.ioc.critical_episode_id)
        hac_pairs.append((critical.stage, 3))
        window_stages.append(critical.stage)

    hac_dist = StageDistribution.from_stages(stage for stage, _ in hac_pairs)
    window_dist = StageDistribution.from_stages(window_stages)
    filtered = window_dist.total - hac_dist.total
    extended = hac_dist.with_filtered(filtered)
    extended_base = base + 1 if config.extended_base_includes_filtered else base

    acg = entropy(hac_dist, base)
    nrg = entropy(window_dist, base) - entropy(extended, extended_base)

    if training_pairs:
        h_hac = conditional_entropy(hac_pairs, base) if hac_pairs else 0.0
        h_train = conditional_entropy(training_pairs, base)
        coh = abs(h_hac - h_train)
        gain = acg + nrg - coh
        partial = False
    else:
        coh = None
        gain = None
        partial = True

    return GainReport(
        acg=acg,
        nrg=nrg,
        coh=coh,
        gain=gain,
        hac_size=len(hac),
        window_size=len(window),
        filtered=filtered,
        partial=partial,
    )


@dataclass
class RankedIoc:
    ioc: Ioc
    hac: Hac
    report: GainReport


def rank_iocs(
    iocs: Sequence[Ioc],
    model: HeatModel,
    store: EpisodeStore,
    lookback_seconds: float | None = None,
    threshold: float = 0.5,
    config: GainConfig | None = None,
) -> list[RankedIoc]:
    """Extract and score a campaign per IoC; keep diverse ones, best gain first.

    IoCs below the stage-coverage threshold are dropped.  Ties break on the
    critical alert's timestamp, then its id.
    """
    config = config or GainConfig()
    n_stages = len(model.stage_ids)
    ranked = []
    for ioc in iocs:
        hac = extract_hac(ioc, model, store, lookback_seconds, threshold)
        report = compute_gain(hac, store, model.training_stage_pairs, n_stages, config)
        if report.acg >= config.acg_threshold:
            ranked.append(RankedIoc(ioc, hac, report))

    def sort_key(item: RankedIoc):
        alert = store.alerts.get(item.ioc.critical_alert_id)
        ts = alert.timestamp if alert else store.get(item.ioc.critical_episode_id).peak_time
        gain = item.report.gain if item.report.gain is not None else -math.inf
        return (-gain, ts, item.ioc.critical_alert_id)

    ranked.sort(key=sort_key)
    return ranked
