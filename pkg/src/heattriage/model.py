"""The heat generator: a regressor over episode-pair features.

Trained from analyst-labeled (critical, prior) episode pairs whose heat
grades the prior episode's contribution to the critical episode's attack
campaign: 0 unrelated, 1 reconnaissance, 2 access-enabling exploitation,
3 objective-level action.  Predictions are continuous and clipped to
[0, 3].

A trained model keeps the feature rows of its training pairs, so it can
be fine-tuned with labels from a different corpus (the original episodes
need not be resolvable there) and so campaign-gain scoring can compare
against the analyst's labeling without the original episode store.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .episodes import Episode, EpisodeStore
from .errors import ValidationError
from .features import PairFeaturizer, Standardizer
from .regressors import regressor_from_dict
from .regressors import GradientBoostedTreesRegressor, TwoLayerPerceptronRegressor

MODEL_FORMAT = "heat-model/1"

HEAT_LEVELS = (0, 1, 2, 3)


@dataclass(frozen=True)
class LabeledPair:
    critical_episode_id: str
    prior_episode_id: str
    heat: int
    annotator: str = "analyst"
    created_at: float = 0.0

    def __post_init__(self):
        if self.heat not in HEAT_LEVELS:
            raise ValidationError(f"heat must be one of {HEAT_LEVELS}, got {self.heat!r}")
        if self.critical_episode_id == self.prior_episode_id:
            raise ValidationError("critical and prior episode must differ")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.critical_episode_id, self.prior_episode_id, self.annotator)

    def to_dict(self) -> dict:
        return {
            "critical_episode_id": self.critical_episode_id,
            "prior_episode_id": self.prior_episode_id,
            "heat": self.heat,
            "annotator": self.annotator,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledPair":
        return cls(
            critical_episode_id=d["critical_episode_id"],
            prior_episode_id=d["prior_episode_id"],
            heat=int(d["heat"]),
            annotator=d.get("annotator", "analyst"),
            created_at=float(d.get("created_at", 0.0)),
        )


@dataclass(frozen=True)
class TrainingRecord:
    """A labeled pair frozen together with its feature row and prior stage."""

    label: LabeledPair
    prior_stage: str
    features: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label.to_dict(),
            "prior_stage": self.prior_stage,
            "features": list(self.features),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingRecord":
        return cls(
            label=LabeledPair.from_dict(d["label"]),
            prior_stage=d["prior_stage"],
            features=tuple(d["features"]),
        )


@dataclass(frozen=True)
class Hyperparams:
    family: str = "gbrt"  # or "mlp"
    n_estimators: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 1
    hidden: tuple[int, int] = (64, 32)
    epochs: int = 400
    mlp_learning_rate: float = 0.01
    seed: int = 7
    cv_folds: int = 5

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)

    def make_regressor(self):
        if self.family == "gbrt":
            return GradientBoostedTreesRegressor(
                n_estimators=self.n_estimators,
                learning_rate=self.learning_rate,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
            )
        if self.family == "mlp":
            return TwoLayerPerceptronRegressor(
                hidden=self.hidden,
                epochs=self.epochs,
                learning_rate=self.mlp_learning_rate,
                seed=self.seed,
            )
        raise ValidationError(f"unknown regressor family {self.family!r}")


def dedupe_labels(labels: Iterable[LabeledPair]) -> list[LabeledPair]:
    """Collapse duplicate (critical, prior, annotator) keys; the later label wins."""
    merged: dict[tuple[str, str, str], LabeledPair] = {}
    for lp in labels:
        merged[lp.key] = lp
    return sorted(merged.values(), key=lambda lp: lp.key)


def _dedupe_records(records: Iterable[TrainingRecord]) -> list[TrainingRecord]:
    merged: dict[tuple[str, str, str], TrainingRecord] = {}
    for rec in records:
        merged[rec.label.key] = rec
    return sorted(merged.values(), key=lambda rec: rec.label.key)


def _labels_fingerprint(labels: Sequence[LabeledPair]) -> str:
    blob = json.dumps([lp.to_dict() for lp in labels], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def stratified_folds(y: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    """Deal each class's shuffled indices round-robin into folds."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        rng.shuffle(idx)
        for i, sample in enumerate(idx):
            folds[i % n_folds].append(int(sample))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


class HeatModel:
    """Trained heat generator plus everything needed to reuse it."""

    def __init__(
        self,
        stage_ids: Sequence[str],
        standardizer: Standardizer,
        regressor,
        hyperparams: Hyperparams,
        records: Sequence[TrainingRecord],
        cv_mse: float,
    ):
        self.stage_ids = list(stage_ids)
        self.standardizer = standardizer
        self.regressor = regressor
        self.hyperparams = hyperparams
        self.records = list(records)
        self.cv_mse = cv_mse
        self.featurizer = PairFeaturizer(self.stage_ids)

    @property
    def labels(self) -> list[LabeledPair]:
        return [rec.label for rec in self.records]

    @property
    def training_stage_pairs(self) -> list[tuple[str, int]]:
        """(prior stage, analyst heat) of every training pair, for coherence scoring."""
        return [(rec.prior_stage, rec.label.heat) for rec in self.records]

    @property
    def vocabulary_fingerprint(self) -> str:
        blob = json.dumps(self.stage_ids, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def training_fingerprint(self) -> str:
        return _labels_fingerprint(self.labels)

    def check_vocabulary(self, stage_ids: Sequence[str]) -> None:
        if list(stage_ids) != self.stage_ids:
            raise ValidationError("model was trained on a different stage vocabulary")

    def predict(self, prior: Episode, critical: Episode) -> float:
        return float(self.predict_pairs([(prior, critical)])[0])

    def predict_pairs(self, pairs: Sequence[tuple[Episode, Episode]]) -> np.ndarray:
        if not pairs:
            return np.empty(0, dtype=np.float64)
        X = self.featurizer.transform(pairs)
        raw = self.regressor.predict(self.standardizer.transform(X))
        return np.clip(raw, 0.0, 3.0)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "stage_ids": self.stage_ids,
            "vocabulary_fingerprint": self.vocabulary_fingerprint,
            "training_fingerprint": self.training_fingerprint,
            "cv_mse": self.cv_mse,
            "hyperparams": self.hyperparams.to_dict(),
            "standardizer": self.standardizer.to_dict(),
            "regressor": self.regressor.to_dict(),
            "training_records": [rec.to_dict() for rec in self.records],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "HeatModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValidationError(f"unsupported model format {d.get('format')!r}")
        return cls(
            stage_ids=d["stage_ids"],
            standardizer=Standardizer.from_dict(d["standardizer"]),
            regressor=regressor_from_dict(d["regressor"]),
            hyperparams=Hyperparams.from_dict(d["hyperparams"]),
            records=[TrainingRecord.from_dict(r) for r in d["training_records"]],
            cv_mse=float(d["cv_mse"]),
        )

    @classmethod
    def load(cls, path) -> "HeatModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def make_training_records(
    labels: Iterable[LabeledPair], store: EpisodeStore, stage_ids: Sequence[str]
) -> list[TrainingRecord]:
    featurizer = PairFeaturizer(stage_ids)
    records = []
    for lp in dedupe_labels(labels):
        prior = store.get(lp.prior_episode_id)
        critical = store.get(lp.critical_episode_id)
        vec = featurizer.features(prior, critical).to_vector()
        records.append(TrainingRecord(lp, prior.stage, tuple(vec.tolist())))
    return records


def _train_from_records(
    records: Sequence[TrainingRecord],
    stage_ids: Sequence[str],
    hp: Hyperparams,
    min_labels: int,
) -> HeatModel:
    if len(records) < min_labels:
        raise ValidationError(f"need at least {min_labels} labels, got {len(records)}")
    heats = {rec.label.heat for rec in records}
    if len(heats) < 2:
        raise ValidationError("degenerate label set: all labels share one heat value")

    X = np.array([rec.features for rec in records], dtype=np.float64)
    y = np.array([rec.label.heat for rec in records], dtype=np.float64)

    fold_mses = []
    for fold in stratified_folds(y, hp.cv_folds, hp.seed):
        train_idx = np.setdiff1d(np.arange(len(y)), fold)
        if len(fold) == 0 or len(train_idx) < 2:
            continue
        scaler = Standardizer().fit(X[train_idx])
        reg = hp.make_regressor().fit(scaler.transform(X[train_idx]), y[train_idx])
        pred = np.clip(reg.predict(scaler.transform(X[fold])), 0.0, 3.0)
        fold_mses.append(float(np.mean((pred - y[fold]) ** 2)))
    cv_mse = float(np.mean(fold_mses)) if fold_mses else 0.0

    standardizer = Standardizer().fit(X)
    regressor = hp.make_regressor().fit(standardizer.transform(X), y)
    return HeatModel(stage_ids, standardizer, regressor, hp, records, cv_mse)


def train(
    labels: Iterable[LabeledPair],
    store: EpisodeStore,
    stage_ids: Sequence[str],
    hyperparams: Hyperparams | None = None,
    min_labels: int = 25,
) -> HeatModel:
    """Fit the heat generator and its standardizer; cv_mse is the mean MSE over
    stratified k-fold splits of the (deduplicated) label set."""
    hp = hyperparams or Hyperparams()
    records = make_training_records(labels, store, stage_ids)
    return _train_from_records(records, stage_ids, hp, min_labels)


def fine_tune(
    model: HeatModel, new_labels: Iterable[LabeledPair], store: EpisodeStore
) -> HeatModel:
    """Full retrain on the union of the model's training set and the new labels.

    New labels are resolved against ``store``; on duplicate
    (critical, prior, annotator) keys the new label wins.
    """
    new_labels = list(new_labels)
    if not new_labels:
        raise ValidationError("fine_tune needs at least one new label")
    new_records = make_training_records(new_labels, store, model.stage_ids)
    combined = _dedupe_records(list(model.records) + new_records)
    return _train_from_records(combined, model.stage_ids, model.hyperparams, min_labels=2)
