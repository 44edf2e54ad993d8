"""File-backed workspace: corpora, label log, and versioned model registry.

Both the CLI and the HTTP service run on top of this class, and both emit
the exact payload dicts it builds, so their outputs stay content-identical.
Persistence is plain files: uploaded corpora are content-addressed, labels
are an append-only JSONL log with tombstone edits, models are immutable
versioned JSON artifacts with an ACTIVE pointer.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .alerts import Alert, AsnTable, StageMapping, StageVocabulary, parse_eve_stream
from .episodes import EpisodeStore, SmoothingConfig, build_all_episodes
from .errors import NotFoundError, TrainingInProgressError, TriageError, ValidationError
from .gain import GainConfig, compute_gain, rank_iocs
from .hac import BASELINE_METHODS, METHOD_HEAT_MODEL, extract_baseline, extract_hac, hac_payload, resolve_ioc
from .model import HeatModel, Hyperparams, LabeledPair, fine_tune, train

WORKSPACE_ENV = "HEATTRIAGE_WORKSPACE"


class NoActiveModelError(TriageError):
    """No trained model is active in the workspace (HTTP 409)."""


@dataclass
class WorkspaceConfig:
    mode: str = "ip"  # aggregation key mode: ip | asn
    bin_width: float = 60.0
    truncation: float = 3.0
    threshold: float = 0.5
    lookback_seconds: float | None = None
    acg_min: float = 0.4
    include_critical: bool = True
    vocab_file: str | None = None
    mapping_file: str | None = None
    asn_table_file: str | None = None
    api_token: str | None = None
    host: str = "127.0.0.1"
    port: int = 8472

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_file(cls, path: Path) -> "WorkspaceConfig":
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class Workspace:
    def __init__(self, root: str | Path, config: WorkspaceConfig | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "corpora").mkdir(exist_ok=True)
        (self.root / "labels").mkdir(exist_ok=True)
        (self.root / "models").mkdir(exist_ok=True)
        if config is not None:
            self.config = config
        else:
            self.config = self._load_config()
        self._train_lock = threading.Lock()
        self._store_cache: tuple[str, EpisodeStore] | None = None

    def _load_config(self) -> WorkspaceConfig:
        for name in ("config.json", "config.yaml", "config.yml"):
            path = self.root / name
            if path.exists():
                return WorkspaceConfig.from_file(path)
        return WorkspaceConfig()

    def save_config(self) -> None:
        _atomic_write(self.root / "config.json", json.dumps(self.config.to_dict(), indent=2))

    # -- stage vocabulary / mapping / asn table -------------------------------

    def _resolve_path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.root / path

    def vocabulary(self) -> StageVocabulary:
        if self.config.vocab_file:
            return StageVocabulary.from_json_file(self._resolve_path(self.config.vocab_file))
        return StageVocabulary.default()

    def mapping(self, vocab: StageVocabulary) -> StageMapping:
        if self.config.mapping_file:
            return StageMapping.from_json_file(self._resolve_path(self.config.mapping_file), vocab)
        return StageMapping.default(vocab)

    def asn_table(self) -> AsnTable | None:
        if self.config.asn_table_file:
            return AsnTable.from_csv(self._resolve_path(self.config.asn_table_file))
        return None

    # -- corpus ----------------------------------------------------------------

    def ingest_bytes(self, data: bytes, mode: str | None = None) -> dict:
        """Ingest an EVE stream; idempotent (same bytes give the same corpus)."""
        mode = mode or self.config.mode
        corpus_id = hashlib.sha256(data + mode.encode()).hexdigest()[:12]
        corpus_dir = self.root / "corpora" / corpus_id
        if not (corpus_dir / "meta.json").exists():
            vocab = self.vocabulary()
            mapping = self.mapping(vocab)
            alerts, stats = parse_eve_stream(data.splitlines(), mapping, vocab)
            cfg = SmoothingConfig(self.config.bin_width, self.config.truncation)
            store = build_all_episodes(alerts, vocab, cfg, mode=mode, asn_table=self.asn_table())
            corpus_dir.mkdir(parents=True, exist_ok=True)
            (corpus_dir / "eve.json").write_bytes(data)
            with open(corpus_dir / "alerts.jsonl", "w", encoding="utf-8") as fh:
                for alert in alerts:
                    fh.write(json.dumps(alert.to_dict(), separators=(",", ":")) + "\n")
            store.dump_jsonl(corpus_dir / "episodes.jsonl")
            meta = {
                "corpus_id": corpus_id,
                "mode": mode,
                "created_at": time.time(),
                "stats": stats.to_dict(),
                "episodes": len(store),
                "vocabulary_fingerprint": vocab.fingerprint(),
            }
            _atomic_write(corpus_dir / "meta.json", json.dumps(meta, indent=2))
        _atomic_write(self.root / "corpora" / "ACTIVE", corpus_id)
        self._store_cache = None
        return json.loads((corpus_dir / "meta.json").read_text(encoding="utf-8"))

    def ingest_file(self, path, mode: str | None = None) -> dict:
        return self.ingest_bytes(Path(path).read_bytes(), mode)

    def active_corpus_id(self) -> str:
        pointer = self.root / "corpora" / "ACTIVE"
        if not pointer.exists():
            raise NotFoundError("workspace has no corpus; ingest one first")
        return pointer.read_text(encoding="utf-8").strip()

    def corpus_meta(self, corpus_id: str | None = None) -> dict:
        corpus_id = corpus_id or self.active_corpus_id()
        meta = self.root / "corpora" / corpus_id / "meta.json"
        if not meta.exists():
            raise NotFoundError(f"unknown corpus {corpus_id!r}")
        return json.loads(meta.read_text(encoding="utf-8"))

    def store(self) -> EpisodeStore:
        corpus_id = self.active_corpus_id()
        if self._store_cache and self._store_cache[0] == corpus_id:
            return self._store_cache[1]
        corpus_dir = self.root / "corpora" / corpus_id
        alerts = []
        with open(corpus_dir / "alerts.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    alerts.append(Alert.from_dict(json.loads(line)))
        store = EpisodeStore.load_jsonl(corpus_dir / "episodes.jsonl", alerts)
        self._store_cache = (corpus_id, store)
        return store

    # -- labels ------------------------------------------------------------------

    @property
    def _labels_path(self) -> Path:
        return self.root / "labels" / "labels.jsonl"

    def append_labels(self, labels: Sequence[LabeledPair]) -> int:
        store = self.store()
        for lp in labels:
            store.get(lp.critical_episode_id)
            store.get(lp.prior_episode_id)
        with open(self._labels_path, "a", encoding="utf-8") as fh:
            for lp in labels:
                rec = lp.to_dict()
                rec["op"] = "add"
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        return len(labels)

    def delete_label(self, critical_episode_id: str, prior_episode_id: str, annotator: str) -> None:
        rec = {
            "op": "delete",
            "critical_episode_id": critical_episode_id,
            "prior_episode_id": prior_episode_id,
            "annotator": annotator,
        }
        with open(self._labels_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    def effective_labels(self) -> list[LabeledPair]:
        """Replay the append-only log; later entries and tombstones win."""
        if not self._labels_path.exists():
            return []
        current: dict[tuple[str, str, str], LabeledPair | None] = {}
        with open(self._labels_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                key = (rec["critical_episode_id"], rec["prior_episode_id"], rec.get("annotator", "analyst"))
                if rec.get("op") == "delete":
                    current[key] = None
                else:
                    current[key] = LabeledPair.from_dict(rec)
        return sorted((lp for lp in current.values() if lp is not None), key=lambda lp: lp.key)

    # -- model registry ------------------------------------------------------------

    def model_versions(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "models").glob("v*.json"))

    def active_model_version(self) -> str:
        pointer = self.root / "models" / "ACTIVE"
        if not pointer.exists():
            raise NoActiveModelError("no active model; train one first")
        return pointer.read_text(encoding="utf-8").strip()

    def model(self, version: str | None = None) -> HeatModel:
        version = version or self.active_model_version()
        path = self.root / "models" / f"{version}.json"
        if not path.exists():
            raise NotFoundError(f"unknown model version {version!r}")
        return HeatModel.load(path)

    def _register_model(self, model: HeatModel) -> str:
        version = f"v{len(self.model_versions()) + 1:04d}"
        model.save(self.root / "models" / f"{version}.json")
        _atomic_write(self.root / "models" / "ACTIVE", version)
        return version

    def train_model(
        self, labels: Sequence[LabeledPair] | None = None, hyperparams: Hyperparams | None = None
    ) -> tuple[str, HeatModel]:
        if not self._train_lock.acquire(blocking=False):
            raise TrainingInProgressError("a training run is already in progress")
        try:
            store = self.store()
            vocab = self.vocabulary()
            model = train(
                labels if labels is not None else self.effective_labels(),
                store,
                vocab.stage_ids,
                hyperparams,
            )
            return self._register_model(model), model
        finally:
            self._train_lock.release()

    def finetune_model(
        self, new_labels: Sequence[LabeledPair], base_version: str | None = None
    ) -> tuple[str, HeatModel]:
        if not new_labels:
            raise ValidationError("finetune needs at least one new label")
        if not self._train_lock.acquire(blocking=False):
            raise TrainingInProgressError("a training run is already in progress")
        try:
            base = self.model(base_version)
            self.append_labels(new_labels)
            model = fine_tune(base, new_labels, self.store())
            return self._register_model(model), model
        finally:
            self._train_lock.release()

    # -- query payloads (shared verbatim by CLI --json and the HTTP service) -------

    def status_payload(self) -> dict:
        out: dict = {"workspace": str(self.root), "config": self.config.to_dict()}
        try:
            out["corpus"] = self.corpus_meta()
        except TriageError:
            out["corpus"] = None
        out["labels"] = len(self.effective_labels())
        out["models"] = self.model_versions()
        try:
            out["active_model"] = self.active_model_version()
        except TriageError:
            out["active_model"] = None
        return out

    def episode_payload(self, episode_id: str) -> dict:
        return self.store().get(episode_id).to_dict()

    def episodes_payload(
        self,
        key: str | None = None,
        stage: str | None = None,
        t_from: float | None = None,
        t_to: float | None = None,
        page: int = 1,
        page_size: int = 100,
    ) -> dict:
        if page < 1 or page_size < 1:
            raise ValidationError("page and page_size must be >= 1")
        episodes = [
            ep
            for ep in self.store().episodes
            if (key is None or ep.key == key)
            and (stage is None or ep.stage == stage)
            and (t_from is None or ep.peak_time >= t_from)
            and (t_to is None or ep.peak_time <= t_to)
        ]
        start = (page - 1) * page_size
        return {
            "total": len(episodes),
            "page": page,
            "page_size": page_size,
            "episodes": [ep.to_dict() for ep in episodes[start : start + page_size]],
        }

    def iocs_payload(
        self, signature: str | None = None, severity_max: int | None = None, limit: int = 50
    ) -> dict:
        store = self.store()
        rows = []
        for alert in sorted(store.alerts.values(), key=lambda a: (a.timestamp, a.id)):
            if signature is not None and signature.lower() not in alert.signature.lower():
                continue
            if severity_max is not None and alert.severity > severity_max:
                continue
            rows.append(
                {
                    "alert_id": alert.id,
                    "timestamp": alert.timestamp,
                    "signature": alert.signature,
                    "src_ip": alert.src_ip,
                    "dst_ip": alert.dst_ip,
                    "severity": alert.severity,
                    "stage": alert.stage,
                    "episode_id": store.episode_of_alert.get(alert.id),
                }
            )
            if len(rows) >= limit:
                break
        return {"total": len(rows), "iocs": rows}

    def _extract(self, alert_id: str, method: str, model_version: str | None, threshold: float | None, lookback: float | None):
        store = self.store()
        ioc = resolve_ioc(store, alert_id=alert_id)
        threshold = self.config.threshold if threshold is None else threshold
        lookback = self.config.lookback_seconds if lookback is None else lookback
        if method == METHOD_HEAT_MODEL:
            model = self.model(model_version)
            model.check_vocabulary(self.vocabulary().stage_ids)
            hac = extract_hac(ioc, model, store, lookback, threshold)
        elif method in BASELINE_METHODS:
            model = None
            hac = extract_baseline(ioc, store, method, lookback)
        else:
            raise ValidationError(f"unknown method {method!r}")
        return store, ioc, hac, model

    def hac_payload_for(
        self,
        alert_id: str,
        method: str = METHOD_HEAT_MODEL,
        model_version: str | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
    ) -> dict:
        store, _, hac, _ = self._extract(alert_id, method, model_version, threshold, lookback)
        return hac_payload(hac, store)

    def gain_payload_for(
        self,
        alert_id: str,
        method: str = METHOD_HEAT_MODEL,
        model_version: str | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
    ) -> dict:
        store, ioc, hac, model = self._extract(alert_id, method, model_version, threshold, lookback)
        training = (model or self.model(model_version)).training_stage_pairs
        config = GainConfig(include_critical=self.config.include_critical, acg_threshold=self.config.acg_min)
        report = compute_gain(hac, store, training, len(self.vocabulary()), config)
        payload = report.to_dict()
        payload["ioc"] = hac.ioc.to_dict()
        payload["method"] = method
        payload["threshold"] = hac.threshold
        payload["lookback"] = hac.lookback_seconds
        return payload

    def rank_payload(
        self,
        model_version: str | None = None,
        acg_min: float | None = None,
        signature: str | None = None,
        severity_max: int | None = None,
        ioc_alert_ids: Sequence[str] | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
        limit: int = 100,
    ) -> dict:
        store = self.store()
        model = self.model(model_version)
        model.check_vocabulary(self.vocabulary().stage_ids)
        if ioc_alert_ids is None:
            if signature is None and severity_max is None:
                severity_max = 1
            candidates = self.iocs_payload(signature, severity_max, limit)["iocs"]
            ioc_alert_ids = [row["alert_id"] for row in candidates]
        iocs = [resolve_ioc(store, alert_id=aid) for aid in ioc_alert_ids]
        config = GainConfig(
            include_critical=self.config.include_critical,
            acg_threshold=self.config.acg_min if acg_min is None else acg_min,
        )
        threshold = self.config.threshold if threshold is None else threshold
        lookback = self.config.lookback_seconds if lookback is None else lookback
        ranked = rank_iocs(iocs, model, store, lookback, threshold, config)
        rows = []
        for item in ranked:
            alert = store.alerts[item.ioc.critical_alert_id]
            row = {
                "ioc": item.ioc.to_dict(),
                "signature": alert.signature,
                "timestamp": alert.timestamp,
                "hac_size": item.report.hac_size,
                "window_size": item.report.window_size,
                "acg": item.report.acg,
                "nrg": item.report.nrg,
                "coh": item.report.coh,
                "gain": item.report.gain,
            }
            rows.append(row)
        return {
            "model": model_version or self.active_model_version(),
            "threshold": threshold,
            "lookback": lookback,
            "acg_min": config.acg_threshold,
            "candidates": len(iocs),
            "ranked": rows,
        }

    def rank_csv(self, payload: dict) -> str:
        lines = ["ioc_id,signature,gain,acg,nrg,coh,hac_size,window_size"]
        for row in payload["ranked"]:
            sig = '"' + row["signature"].replace('"', '""') + '"'
            lines.append(
                f'{row["ioc"]["critical_alert_id"]},{sig},{row["gain"]},{row["acg"]},'
                f'{row["nrg"]},{row["coh"]},{row["hac_size"]},{row["window_size"]}'
            )
        return "\n".join(lines) + "\n"
