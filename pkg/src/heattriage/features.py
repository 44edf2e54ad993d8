"""Network-agnostic features for an ordered (prior, critical) episode pair.

Features never contain addresses, ports, or signatures themselves, only
set relations between the two episodes (Jaccard ratios, intersection
flags), signed time differences, and stage one-hots, so a model trained
on one network transfers to another.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .episodes import Episode
from .errors import ValidationError

OverlapMode = Literal["jaccard", "seconds"]


@dataclass(frozen=True)
class PairFeatures:
    interval_overlap: float
    peak_diff: float  # critical minus prior, seconds
    start_diff: float
    end_diff: float
    has_match_src: int
    has_match_tgt: int
    src_ratio: float
    tgt_ratio: float
    crit_src_as_tgt: int
    crit_tgt_as_src: int
    crit_ais_onehot: tuple[int, ...]
    prior_ais_onehot: tuple[int, ...]
    has_match_sig: int
    sig_ratio: float
    match_dst_port: int

    def to_vector(self) -> np.ndarray:
        scalars = [
            self.interval_overlap, self.peak_diff, self.start_diff, self.end_diff,
            self.has_match_src, self.has_match_tgt, self.src_ratio, self.tgt_ratio,
            self.crit_src_as_tgt, self.crit_tgt_as_src,
        ]
        tail = [self.has_match_sig, self.sig_ratio, self.match_dst_port]
        return np.array(
            scalars + list(self.crit_ais_onehot) + list(self.prior_ais_onehot) + tail,
            dtype=np.float64,
        )


def feature_names(stage_ids: Sequence[str]) -> list[str]:
    """Column order of the feature vector (and of the CSV export)."""
    names = [
        "interval_overlap", "peak_diff", "start_diff", "end_diff",
        "has_match_src", "has_match_tgt", "src_ratio", "tgt_ratio",
        "crit_src_as_tgt", "crit_tgt_as_src",
    ]
    names += [f"crit_ais_{s}" for s in stage_ids]
    names += [f"prior_ais_{s}" for s in stage_ids]
    names += ["has_match_sig", "sig_ratio", "match_dst_port"]
    return names


def _jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def _interval_jaccard(prior: Episode, critical: Episode) -> float:
    lo = max(critical.start_time, prior.start_time)
    hi = min(critical.end_time, prior.end_time)
    inter = max(0.0, hi - lo)
    union = max(critical.end_time, prior.end_time) - min(critical.start_time, prior.start_time)
    if union == 0.0:
        # Both are point intervals; identical points overlap fully.
        return 1.0
    return inter / union


class PairFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer from (prior, critical) episode pairs to vectors."""

    def __init__(self, stage_ids: Sequence[str], overlap_mode: OverlapMode = "jaccard"):
        self.stage_ids = list(stage_ids)
        self.overlap_mode = overlap_mode
        self._stage_index = {s: i for i, s in enumerate(self.stage_ids)}

    @property
    def n_features(self) -> int:
        return 13 + 2 * len(self.stage_ids)

    def get_feature_names_out(self, input_features=None) -> list[str]:
        return feature_names(self.stage_ids)

    def _onehot(self, stage: str) -> tuple[int, ...]:
        try:
            i = self._stage_index[stage]
        except KeyError:
            raise ValidationError(f"episode stage {stage!r} not in the model vocabulary") from None
        return tuple(1 if j == i else 0 for j in range(len(self.stage_ids)))

    def features(self, prior: Episode, critical: Episode) -> PairFeatures:
        if prior.episode_id == critical.episode_id:
            raise ValidationError("prior and critical episode must differ")
        if self.overlap_mode == "jaccard":
            overlap = _interval_jaccard(prior, critical)
        else:
            lo = max(critical.start_time, prior.start_time)
            hi = min(critical.end_time, prior.end_time)
            overlap = max(0.0, hi - lo)
        return PairFeatures(
            interval_overlap=overlap,
            peak_diff=critical.peak_time - prior.peak_time,
            start_diff=critical.start_time - prior.start_time,
            end_diff=critical.end_time - prior.end_time,
            has_match_src=int(bool(critical.sources & prior.sources)),
            has_match_tgt=int(bool(critical.targets & prior.targets)),
            src_ratio=_jaccard(critical.sources, prior.sources),
            tgt_ratio=_jaccard(critical.targets, prior.targets),
            crit_src_as_tgt=int(bool(critical.sources & prior.targets)),
            crit_tgt_as_src=int(bool(critical.targets & prior.sources)),
            crit_ais_onehot=self._onehot(critical.stage),
            prior_ais_onehot=self._onehot(prior.stage),
            has_match_sig=int(bool(critical.signatures & prior.signatures)),
            sig_ratio=_jaccard(critical.signatures, prior.signatures),
            match_dst_port=int(bool(critical.dst_ports & prior.dst_ports)),
        )

    def fit(self, X=None, y=None):
        return self

    def transform(self, pairs: Iterable[tuple[Episode, Episode]]) -> np.ndarray:
        rows = [self.features(p, c).to_vector() for p, c in pairs]
        if not rows:
            return np.empty((0, self.n_features), dtype=np.float64)
        return np.vstack(rows)


class Standardizer(BaseEstimator, TransformerMixin):
    """Zero-mean, unit-variance scaling; zero-variance columns are centered only."""

    def fit(self, X: np.ndarray, y=None) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValidationError("standardizer needs at least 2 training vectors")
        self.mean_ = X.mean(axis=0)
        self.std_ = X.std(axis=0)  # population std
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean_.shape[0]:
            raise ValidationError(
                f"dimension mismatch: got {X.shape[-1]}, expected {self.mean_.shape[0]}"
            )
        centered = X - self.mean_
        return np.where(self.std_ > 0, centered / np.where(self.std_ > 0, self.std_, 1.0), centered)

    def to_dict(self) -> dict:
        return {"mean": self.mean_.tolist(), "std": self.std_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        s = cls()
        s.mean_ = np.array(d["mean"], dtype=np.float64)
        s.std_ = np.array(d["std"], dtype=np.float64)
        return s


def export_feature_csv(path, stage_ids: Sequence[str], rows: Iterable[PairFeatures]) -> None:
    """Feature matrix as CSV with a mandatory header in the documented order."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(feature_names(stage_ids))
        for pf in rows:
            writer.writerow(pf.to_vector().tolist())
