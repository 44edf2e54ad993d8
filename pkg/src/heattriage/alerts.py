"""Alert ingestion: EVE JSON parsing, stage mapping, and aggregation keys.

Reads newline-delimited Suricata EVE JSON, normalizes every ``alert`` event
into an :class:`Alert`, and tags it with an attack-intent stage through an
ordered first-match rule list (:class:`StageMapping`).  Source IPs can be
coarsened to ASNs for high-volume environments via :class:`AsnTable`.
"""

from __future__ import annotations

import csv
import hashlib
import ipaddress
import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Literal, Sequence

from .defaults import DEFAULT_MAPPING_RULES, DEFAULT_STAGES, UNMAPPED_STAGE
from .errors import ValidationError

StageId = str
KeyId = str

ASN_UNKNOWN_KEY = "asn-unknown"

_RULE_KINDS = ("signature_id", "signature", "substring", "category")

_TZ_COMPACT = re.compile(r"([+-]\d{2})(\d{2})$")


@dataclass(frozen=True, slots=True)
class Alert:
    """One normalized IDS alert."""

    id: str
    timestamp: float  # UTC epoch seconds
    src_ip: str
    dst_ip: str
    dst_port: int | None
    signature: str
    signature_id: int
    category: str
    severity: int
    stage: StageId

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "timestamp": self.timestamp,
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "dst_port": self.dst_port,
            "signature": self.signature,
            "signature_id": self.signature_id,
            "category": self.category,
            "severity": self.severity,
            "stage": self.stage,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Alert":
        return cls(
            id=d["id"],
            timestamp=float(d["timestamp"]),
            src_ip=d["src_ip"],
            dst_ip=d["dst_ip"],
            dst_port=d["dst_port"],
            signature=d["signature"],
            signature_id=int(d["signature_id"]),
            category=d["category"],
            severity=int(d["severity"]),
            stage=d["stage"],
        )


@dataclass(frozen=True, slots=True)
class StageDef:
    stage_id: StageId
    display: str
    smoothing_seconds: float


class StageVocabulary:
    """Ordered attack-stage alphabet with per-stage smoothing durations."""

    def __init__(self, stages: Sequence[StageDef]):
        if not stages:
            raise ValidationError("stage vocabulary must not be empty")
        ids = [s.stage_id for s in stages]
        if len(set(ids)) != len(ids):
            raise ValidationError("stage ids must be unique")
        if UNMAPPED_STAGE not in ids:
            raise ValidationError(f"vocabulary must contain the fallback stage {UNMAPPED_STAGE!r}")
        for s in stages:
            if not s.smoothing_seconds > 0:
                raise ValidationError(f"stage {s.stage_id!r}: smoothing_seconds must be > 0")
        self.stages = list(stages)
        self.stage_ids: list[StageId] = ids
        self._index = {sid: i for i, sid in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.stages)

    def __contains__(self, stage_id: str) -> bool:
        return stage_id in self._index

    def index(self, stage_id: StageId) -> int:
        try:
            return self._index[stage_id]
        except KeyError:
            raise ValidationError(f"unknown stage {stage_id!r}") from None

    def smoothing_seconds(self, stage_id: StageId) -> float:
        return self.stages[self.index(stage_id)].smoothing_seconds

    def display(self, stage_id: StageId) -> str:
        return self.stages[self.index(stage_id)].display

    def fingerprint(self) -> str:
        blob = json.dumps(self.stage_ids, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_records(self) -> list[dict]:
        return [
            {"stage_id": s.stage_id, "display": s.display, "smoothing_seconds": s.smoothing_seconds}
            for s in self.stages
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "StageVocabulary":
        return cls([
            StageDef(r["stage_id"], r.get("display", r["stage_id"]), float(r["smoothing_seconds"]))
            for r in records
        ])

    @classmethod
    def from_json_file(cls, path) -> "StageVocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_records(json.load(fh))

    @classmethod
    def default(cls) -> "StageVocabulary":
        return cls([StageDef(*row) for row in DEFAULT_STAGES])


@dataclass(frozen=True, slots=True)
class MappingRule:
    kind: str
    value: str | int
    stage: StageId


class StageMapping:
    """Ordered signature-to-stage rules; first matching rule wins."""

    def __init__(self, rules: Sequence[MappingRule], vocab: StageVocabulary):
        for rule in rules:
            if rule.kind not in _RULE_KINDS:
                raise ValidationError(f"unknown rule kind {rule.kind!r}")
            if rule.stage not in vocab:
                raise ValidationError(f"rule stage {rule.stage!r} not in vocabulary")
            if rule.kind == "signature_id" and not isinstance(rule.value, int):
                raise ValidationError("signature_id rules need an integer value")
        self.rules = list(rules)

    def map_signature(self, signature: str, signature_id: int, category: str) -> StageId:
        """Stage of the first matching rule; the fallback stage if none match."""
        for rule in self.rules:
            if rule.kind == "signature_id":
                if signature_id == rule.value:
                    return rule.stage
            elif rule.kind == "signature":
                if signature == rule.value:
                    return rule.stage
            elif rule.kind == "substring":
                if str(rule.value) in signature:
                    return rule.stage
            elif category == rule.value:
                return rule.stage
        return UNMAPPED_STAGE

    def to_records(self) -> list[dict]:
        return [{"match": {"kind": r.kind, "value": r.value}, "stage": r.stage} for r in self.rules]

    @classmethod
    def from_records(cls, records: Iterable[dict], vocab: StageVocabulary) -> "StageMapping":
        rules = [MappingRule(r["match"]["kind"], r["match"]["value"], r["stage"]) for r in records]
        return cls(rules, vocab)

    @classmethod
    def from_json_file(cls, path, vocab: StageVocabulary) -> "StageMapping":
        with open(path, encoding="utf-8") as fh:
            return cls.from_records(json.load(fh), vocab)

    @classmethod
    def default(cls, vocab: StageVocabulary | None = None) -> "StageMapping":
        return cls.from_records(DEFAULT_MAPPING_RULES, vocab or StageVocabulary.default())


def map_signature(signature: str, signature_id: int, category: str, mapping: StageMapping) -> StageId:
    return mapping.map_signature(signature, signature_id, category)


@dataclass
class IngestStats:
    alerts: int = 0
    skipped_non_alert: int = 0
    skipped_malformed: int = 0

    def to_dict(self) -> dict:
        return {
            "alerts": self.alerts,
            "skipped_non_alert": self.skipped_non_alert,
            "skipped_malformed": self.skipped_malformed,
        }


def parse_eve_timestamp(value: str | float | int) -> float:
    """EVE timestamp (ISO 8601, e.g. ``2021-06-01T10:23:45.123456+0000``) to UTC epoch seconds."""
    if isinstance(value, (int, float)):
        ts = float(value)
    else:
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        # Python 3.10 fromisoformat rejects compact "+0000" offsets.
        text = _TZ_COMPACT.sub(r"\1:\2", text)
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        ts = dt.timestamp()
    if not math.isfinite(ts) or ts < 0:
        raise ValueError(f"timestamp out of range: {value!r}")
    return ts


def _alert_from_event(event: dict, ordinal: int, mapping: StageMapping, vocab: StageVocabulary) -> Alert:
    alert = event["alert"]
    signature = str(alert["signature"])
    signature_id = int(alert["signature_id"])
    category = str(alert.get("category", ""))
    severity = int(alert["severity"])
    if severity < 1:
        raise ValueError(f"severity must be >= 1, got {severity}")
    port = event.get("dest_port")
    if port is not None:
        port = int(port)
        if not 0 <= port <= 65535:
            raise ValueError(f"dest_port out of range: {port}")
    stage = mapping.map_signature(signature, signature_id, category)
    if stage not in vocab:
        raise ValueError(f"mapped stage {stage!r} missing from vocabulary")
    return Alert(
        id=f"a{ordinal:06d}",
        timestamp=parse_eve_timestamp(event["timestamp"]),
        src_ip=str(event["src_ip"]),
        dst_ip=str(event["dest_ip"]),
        dst_port=port,
        signature=signature,
        signature_id=signature_id,
        category=category,
        severity=severity,
        stage=stage,
    )


def parse_eve_stream(
    stream: IO[bytes] | IO[str] | Iterable[bytes | str],
    mapping: StageMapping | None = None,
    vocab: StageVocabulary | None = None,
) -> tuple[list[Alert], IngestStats]:
    """Parse newline-delimited EVE JSON into alerts.

    Non-alert events and malformed lines are skipped and counted, never
    fatal.  Alert ids are assigned from the 1-based ordinal of the alert
    event within the stream, so re-ingesting the same stream reproduces
    the same ids.
    """
    vocab = vocab or StageVocabulary.default()
    mapping = mapping or StageMapping.default(vocab)
    alerts: list[Alert] = []
    stats = IngestStats()
    ordinal = 0
    for raw_line in stream:
        line = raw_line.decode("utf-8", errors="replace") if isinstance(raw_line, bytes) else raw_line
        line = line.strip()
        if not line:
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError:
            stats.skipped_malformed += 1
            continue
        if not isinstance(event, dict):
            stats.skipped_malformed += 1
            continue
        if event.get("event_type") != "alert":
            stats.skipped_non_alert += 1
            continue
        try:
            ordinal += 1
            alerts.append(_alert_from_event(event, ordinal, mapping, vocab))
        except (KeyError, TypeError, ValueError):
            ordinal -= 1
            stats.skipped_malformed += 1
    stats.alerts = len(alerts)
    return alerts, stats


def parse_eve_file(path, mapping=None, vocab=None) -> tuple[list[Alert], IngestStats]:
    with open(path, "rb") as fh:
        return parse_eve_stream(fh, mapping, vocab)


class AsnTable:
    """CIDR prefix to ASN lookup (most specific prefix wins)."""

    def __init__(self, entries: Iterable[tuple[str, str | int]]):
        nets: list[tuple[ipaddress.IPv4Network | ipaddress.IPv6Network, str]] = []
        for cidr, asn in entries:
            try:
                nets.append((ipaddress.ip_network(str(cidr).strip(), strict=False), str(asn).strip()))
            except ValueError as exc:
                raise ValidationError(f"bad CIDR {cidr!r}: {exc}") from exc
        # Most specific first so the first containment hit is the answer.
        self._nets = sorted(nets, key=lambda item: -item[0].prefixlen)
        self._cache: dict[str, str | None] = {}

    def lookup(self, ip: str) -> str | None:
        if ip in self._cache:
            return self._cache[ip]
        asn: str | None = None
        try:
            addr = ipaddress.ip_address(ip)
        except ValueError:
            addr = None
        if addr is not None:
            for net, net_asn in self._nets:
                if addr.version == net.version and addr in net:
                    asn = net_asn
                    break
        self._cache[ip] = asn
        return asn

    @classmethod
    def from_csv(cls, path) -> "AsnTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].lstrip().startswith("#")]
        if rows and rows[0][0].strip().lower() == "cidr":
            rows = rows[1:]
        return cls((row[0], row[1]) for row in rows)


KeyMode = Literal["ip", "asn"]


def resolve_aggregation_key(alert: Alert, mode: KeyMode = "ip", asn_table: AsnTable | None = None) -> KeyId:
    """Aggregation key of an alert: its source IP, or that IP's ASN."""
    if mode == "ip":
        return alert.src_ip
    if mode == "asn":
        if asn_table is None:
            raise ValidationError("asn mode requires an ASN table")
        asn = asn_table.lookup(alert.src_ip)
        return ASN_UNKNOWN_KEY if asn is None else f"asn-{asn}"
    raise ValidationError(f"unknown aggregation mode {mode!r}")
