"""Synthetic alert corpora with planted, labeled multistage campaigns.

Real triage corpora cannot be redistributed, so verification runs on
generated ones: a few attacker campaigns (one source network each,
stage bursts in template order, a heat-3 terminal action) buried in
Poisson background noise from a large disjoint address pool.  Output is
EVE JSON plus a truth stream carrying each alert's campaign and heat
level; alert ids match what ingestion will assign, so truth lines up
with parsed corpora by id.
"""

from __future__ import annotations

import ipaddress
import json
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from .episodes import EpisodeStore
from .errors import ValidationError
from .model import LabeledPair

# Heat level implied by a stage when the episode belongs to the IoC's own
# campaign: reconnaissance 1, access-enabling activity 2, objective-level 3.
STAGE_TRUTH_HEAT: dict[str, int] = {
    "discovery": 1,
    "exploitation": 2,
    "privilege_escalation": 2,
    "lateral_movement": 2,
    "command_and_control": 2,
    "exfiltration": 3,
    "denial_of_service": 3,
    "benign": 0,
    "unmapped": 0,
}


@dataclass(frozen=True)
class SigDef:
    signature_id: int
    signature: str
    category: str
    severity: int
    dst_ports: tuple[int, ...]


# Categories (and two signature substrings) chosen to hit the built-in
# mapping rules, so generated corpora ingest onto the intended stages.
STAGE_SIGNATURES: dict[str, tuple[SigDef, ...]] = {
    "discovery": (
        SigDef(2001219, "ET SCAN Potential SSH Scan", "Attempted Information Leak", 2, (22,)),
        SigDef(2002910, "ET SCAN Potential VNC Scan", "Attempted Information Leak", 2, (5900,)),
        SigDef(2010935, "ET SCAN Suspicious inbound to mySQL port 3306", "Detection of a Network Scan", 2, (3306,)),
        SigDef(2100469, "GPL ICMP_INFO PING NMAP", "Attempted Information Leak", 3, (7,)),
    ),
    "exploitation": (
        SigDef(2019232, "ET WEB_SERVER Possible SQLi UNION SELECT in URI", "Web Application Attack", 1, (80, 443)),
        SigDef(2024364, "ET EXPLOIT Apache Struts2 REST Plugin RCE", "Attempted User Privilege Gain", 1, (8080, 80)),
        SigDef(2101390, "GPL SHELLCODE x86 inc ebx NOOP", "Misc Attack", 1, (445, 139)),
    ),
    "privilege_escalation": (
        SigDef(2010781, "ET POLICY Possible Admin Privilege Escalation", "Attempted Administrator Privilege Gain", 1, (445,)),
        SigDef(2012887, "ET EXPLOIT Windows Token Elevation Attempt", "Successful Administrator Privilege Gain", 1, (445, 135)),
    ),
    "lateral_movement": (
        SigDef(2027180, "ET POLICY SMB Executable Transfer Lateral Spread", "Potentially Bad Traffic", 1, (445,)),
        SigDef(2027181, "ET POLICY PsExec Service Start Lateral Motion", "Potentially Bad Traffic", 1, (445, 135)),
    ),
    "command_and_control": (
        SigDef(2018959, "ET TROJAN Backdoor Beacon Response", "A Network Trojan was Detected", 1, (4444, 8443)),
        SigDef(2023882, "ET MALWARE Cobalt Strike Beacon Observed", "Malware Command and Control Activity Detected", 1, (443, 8080)),
    ),
    "exfiltration": (
        SigDef(2025275, "ET POLICY Large Outbound Data Transfer", "Potential Corporate Privacy Violation", 1, (443,)),
        SigDef(2027044, "ET DNS Query Flood - DNS Tunnel Channel", "Potentially Bad Traffic", 1, (53,)),
    ),
    "denial_of_service": (
        SigDef(2019010, "ET DOS Possible SYN Flood Inbound", "Attempted Denial of Service", 1, (80,)),
    ),
    "benign": (
        SigDef(2013028, "ET POLICY curl User-Agent Outbound", "Not Suspicious Traffic", 3, (80, 443)),
        SigDef(2101411, "GPL SNMP public access udp", "Generic Protocol Command Decode", 3, (161,)),
        SigDef(2013504, "ET POLICY GNU/Linux APT User-Agent Outbound", "Not Suspicious Traffic", 3, (80,)),
        SigDef(2012648, "ET POLICY Dropbox Client Broadcasting", "Misc activity", 3, (17500,)),
    ),
}


@dataclass(frozen=True)
class CampaignTemplate:
    """Stage sequence of one attacker, with burst and inter-stage timing.

    ``benign_bursts`` are irrelevant tool-noise bursts the attacker's host
    emits alongside the campaign; they share its source address but carry
    no heat, which keeps source-matching from being a perfect oracle.
    """

    stages: tuple[str, ...] = (
        "discovery",
        "exploitation",
        "privilege_escalation",
        "command_and_control",
        "exfiltration",
    )
    burst_alerts: tuple[int, int] = (30, 70)
    burst_seconds: tuple[float, float] = (60.0, 240.0)
    stage_gap_seconds: tuple[float, float] = (600.0, 1800.0)
    sources_per_stage: tuple[int, int] = (1, 1)
    targets_per_stage: tuple[int, int] = (1, 2)
    benign_bursts: int = 3
    benign_burst_alerts: tuple[int, int] = (6, 16)
    # Walk through the attacker's address list burst by burst instead of
    # re-sampling, so consecutive bursts come from disjoint source sets
    # (SOC-style address rotation within one autonomous system).
    rotate_sources: bool = False


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 1
    start_time: float = 1_622_505_600.0  # 2021-06-01T00:00:00Z
    duration: float = 21_600.0
    n_attackers: int = 3
    templates: tuple[CampaignTemplate, ...] = (CampaignTemplate(),)
    noise_rate: float = 0.88  # alerts/second
    attacker_networks: tuple[str, ...] = ("203.0.101.0/24", "203.0.102.0/24", "203.0.103.0/24")
    attacker_ips_per_campaign: int = 1
    victim_network: str = "10.0.2.0/24"
    n_victims: int = 12
    victims_per_campaign: int = 3
    noise_source_network: str = "198.51.0.0/20"
    n_noise_sources: int = 800
    n_busy_sources: int = 40
    busy_weight: float = 0.7
    noise_target_network: str = "10.0.3.0/24"
    n_noise_targets: int = 30
    noise_to_victim_fraction: float = 0.5

    def __post_init__(self):
        if self.duration <= 0 or self.noise_rate < 0:
            raise ValidationError("duration must be > 0 and noise_rate >= 0")
        if self.n_attackers > len(self.attacker_networks):
            raise ValidationError("need one attacker network per attacker")
        for template in self.templates:
            for stage in template.stages:
                if stage not in STAGE_SIGNATURES:
                    raise ValidationError(f"no signature pool for stage {stage!r}")
                if template.stage_gap_seconds[0] <= 0:
                    raise ValidationError("inter-stage delays must be > 0")
            if STAGE_TRUTH_HEAT[template.stages[-1]] != 3:
                raise ValidationError("templates must end in an objective-level (heat 3) stage")

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "templates"}
        d["templates"] = [t.__dict__.copy() for t in self.templates]
        return json.loads(json.dumps(d))  # tuples to lists

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        templates = []
        for t in d.pop("templates", [CampaignTemplate().__dict__]):
            t = {k: tuple(v) if isinstance(v, list) else v for k, v in t.items()}
            t["stages"] = tuple(t["stages"])
            templates.append(CampaignTemplate(**t))
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(templates=tuple(templates), **d)

    @classmethod
    def desk_scale(cls, seed: int = 1) -> "ScenarioSpec":
        """Default verification corpus: ~20k alerts, 3 campaigns, ~95% noise."""
        return cls(seed=seed)

    @classmethod
    def transfer_target(cls, seed: int = 1) -> "ScenarioSpec":
        """Disjoint-address scenario meant for ASN-keyed aggregation.

        Attackers rotate through several source IPs and spray wider target
        sets per burst, so episode IP-overlap ratios sit well below the
        near-exact matches the default scenario produces.
        """
        template = CampaignTemplate(
            stages=(
                "discovery",
                "exploitation",
                "lateral_movement",
                "command_and_control",
                "exfiltration",
            ),
            burst_alerts=(40, 80),
            burst_seconds=(120.0, 360.0),
            stage_gap_seconds=(900.0, 2400.0),
            sources_per_stage=(2, 2),
            targets_per_stage=(3, 6),
            rotate_sources=True,
        )
        return cls(
            seed=seed,
            duration=28_800.0,
            templates=(template,),
            noise_rate=0.5,
            attacker_networks=("172.20.1.0/24", "172.20.2.0/24", "172.20.3.0/24"),
            attacker_ips_per_campaign=12,
            victim_network="172.31.50.0/24",
            n_victims=20,
            victims_per_campaign=8,
            noise_source_network="100.64.0.0/18",
            n_noise_sources=600,
            n_busy_sources=30,
            noise_target_network="172.31.60.0/24",
            n_noise_targets=24,
        )


def asn_entries(spec: ScenarioSpec) -> list[tuple[str, str]]:
    """CIDR-to-ASN rows covering a scenario's address pools.

    One ASN per attacker network; noise sources are split across their /24s
    so ASN aggregation coarsens but does not collapse the background.
    """
    entries = [(net, str(64500 + i)) for i, net in enumerate(spec.attacker_networks)]
    entries.append((spec.victim_network, "64496"))
    entries.append((spec.noise_target_network, "64497"))
    noise = ipaddress.ip_network(spec.noise_source_network)
    prefix = min(24, noise.max_prefixlen)
    if noise.prefixlen >= prefix:
        entries.append((str(noise), "65000"))
    else:
        for i, sub in enumerate(noise.subnets(new_prefix=prefix)):
            entries.append((str(sub), str(65000 + i)))
    return entries


def _hosts(network: str, count: int, offset: int = 1) -> list[str]:
    net = ipaddress.ip_network(network)
    size = net.num_addresses - 2
    if count + offset - 1 > size:
        raise ValidationError(f"network {network} too small for {count} hosts")
    base = int(net.network_address)
    return [str(ipaddress.ip_address(base + offset + i)) for i in range(count)]


def _iso(ts: float) -> str:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%f+0000")


@dataclass
class _Event:
    ts: float
    seq: int
    src: str
    dst: str
    port: int
    sig: SigDef
    stage: str
    campaign_id: str | None
    truth_heat: int


@dataclass
class Scenario:
    spec: ScenarioSpec
    eve_lines: list[str]
    truth: list[dict]

    @property
    def truth_by_alert(self) -> dict[str, dict]:
        return {t["alert_id"]: t for t in self.truth}

    def campaign_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.truth:
            if t["campaign_id"]:
                seen.setdefault(t["campaign_id"])
        return list(seen)

    def ioc_alert_id(self, campaign_id: str) -> str:
        """The campaign's critical alert: last alert of its terminal stage."""
        rows = [t for t in self.truth if t["campaign_id"] == campaign_id and t["truth_heat"] == 3]
        if not rows:
            raise ValidationError(f"campaign {campaign_id!r} has no terminal alerts")
        return rows[-1]["alert_id"]

    def noise_ioc_alert_ids(self, n: int, seed: int = 0) -> list[str]:
        """Deterministic sample of suspicious-looking noise alerts to rank against."""
        pool = [
            t["alert_id"]
            for t in self.truth
            if t["campaign_id"] is None and t["stage"] not in ("benign", "unmapped")
        ]
        rng = random.Random(self.spec.seed * 100003 + seed)
        return sorted(rng.sample(pool, min(n, len(pool))))

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        eve_path = out / "eve.json"
        truth_path = out / "truth.jsonl"
        eve_path.write_text("\n".join(self.eve_lines) + "\n", encoding="utf-8")
        with open(truth_path, "w", encoding="utf-8") as fh:
            for t in self.truth:
                fh.write(json.dumps(t, separators=(",", ":")) + "\n")
        return eve_path, truth_path


def generate(spec: ScenarioSpec) -> Scenario:
    """Deterministically expand a spec into an EVE stream plus per-alert truth."""
    rng = random.Random(spec.seed)
    victims = _hosts(spec.victim_network, spec.n_victims)
    noise_sources = _hosts(spec.noise_source_network, spec.n_noise_sources)
    noise_targets = _hosts(spec.noise_target_network, spec.n_noise_targets)
    events: list[_Event] = []
    seq = 0

    def emit(ts, src, dst, port, sig, stage, campaign_id, heat):
        nonlocal seq
        events.append(_Event(ts, seq, src, dst, port, sig, stage, campaign_id, heat))
        seq += 1

    for c in range(spec.n_attackers):
        campaign_id = f"c{c + 1}"
        template = spec.templates[c % len(spec.templates)]
        attacker_ips = _hosts(spec.attacker_networks[c], spec.attacker_ips_per_campaign, offset=10)
        campaign_victims = rng.sample(victims, min(spec.victims_per_campaign, len(victims)))
        rotation = list(attacker_ips)
        rng.shuffle(rotation)
        cursor = 0
        campaign_start = spec.start_time + rng.uniform(0.05, 0.55) * spec.duration
        t = campaign_start
        terminal_start = t
        for stage in template.stages:
            terminal_start = t
            burst_n = rng.randint(*template.burst_alerts)
            span = rng.uniform(*template.burst_seconds)
            n_src = rng.randint(*template.sources_per_stage)
            if template.rotate_sources:
                srcs = [rotation[(cursor + i) % len(rotation)] for i in range(n_src)]
                cursor += n_src
            else:
                srcs = rng.sample(attacker_ips, min(n_src, len(attacker_ips)))
            n_tgt = rng.randint(*template.targets_per_stage)
            tgts = rng.sample(campaign_victims, min(n_tgt, len(campaign_victims)))
            sig = rng.choice(STAGE_SIGNATURES[stage])
            heat = STAGE_TRUTH_HEAT[stage]
            for _ in range(burst_n):
                emit(
                    t + rng.uniform(0.0, span),
                    rng.choice(srcs),
                    rng.choice(tgts),
                    rng.choice(sig.dst_ports),
                    sig,
                    stage,
                    campaign_id,
                    heat,
                )
            t += span + rng.uniform(*template.stage_gap_seconds)
        for _ in range(template.benign_bursts):
            burst_n = rng.randint(*template.benign_burst_alerts)
            start = campaign_start + rng.uniform(0.0, max(terminal_start - campaign_start, 60.0))
            span = rng.uniform(*template.burst_seconds)
            src = rng.choice(attacker_ips)
            tgt = rng.choice(campaign_victims)
            sig = rng.choice(STAGE_SIGNATURES["benign"])
            for _ in range(burst_n):
                emit(
                    start + rng.uniform(0.0, span),
                    src,
                    tgt,
                    rng.choice(sig.dst_ports),
                    sig,
                    "benign",
                    campaign_id,
                    0,
                )

    n_noise = round(spec.noise_rate * spec.duration)
    busy = noise_sources[: spec.n_busy_sources]
    quiet = noise_sources[spec.n_busy_sources :] or busy
    # Each background source gets a narrow behavioral profile (chatty
    # service, scanner, or a box stuck on one odd signature) rather than a
    # global stage mix, so no single noise source walks the whole kill chain.
    tail_stages = [s for s in STAGE_SIGNATURES if s not in ("benign", "discovery")]
    profiles: dict[str, tuple[tuple[str, float], ...]] = {}
    for src in noise_sources:
        r = rng.random()
        if r < 0.70:
            profiles[src] = (("benign", 0.95), ("discovery", 1.0))
        elif r < 0.85:
            profiles[src] = (("discovery", 0.7), ("benign", 1.0))
        else:
            odd = rng.choice(tail_stages)
            profiles[src] = (("benign", 0.8), (odd, 1.0))
    for _ in range(n_noise):
        src = rng.choice(busy) if rng.random() < spec.busy_weight else rng.choice(quiet)
        r = rng.random()
        stage = next(s for s, cum in profiles[src] if r < cum)
        sig = rng.choice(STAGE_SIGNATURES[stage])
        dst = rng.choice(victims) if rng.random() < spec.noise_to_victim_fraction else rng.choice(noise_targets)
        emit(
            spec.start_time + rng.uniform(0.0, spec.duration),
            src,
            dst,
            rng.choice(sig.dst_ports),
            sig,
            stage,
            None,
            0,
        )

    events.sort(key=lambda e: (e.ts, e.seq))
    eve_lines: list[str] = []
    truth: list[dict] = []
    for ordinal, ev in enumerate(events, start=1):
        record = {
            "timestamp": _iso(ev.ts),
            "flow_id": 100000 + ev.seq,
            "event_type": "alert",
            "src_ip": ev.src,
            "src_port": 40000 + ev.seq % 20000,
            "dest_ip": ev.dst,
            "dest_port": ev.port,
            "proto": "TCP",
            "alert": {
                "action": "allowed",
                "gid": 1,
                "signature_id": ev.sig.signature_id,
                "rev": 1,
                "signature": ev.sig.signature,
                "category": ev.sig.category,
                "severity": ev.sig.severity,
            },
        }
        eve_lines.append(json.dumps(record, separators=(",", ":")))
        truth.append(
            {
                "alert_id": f"a{ordinal:06d}",
                "campaign_id": ev.campaign_id,
                "stage": ev.stage,
                "truth_heat": ev.truth_heat,
            }
        )
    return Scenario(spec, eve_lines, truth)


@dataclass(frozen=True)
class EpisodeTruth:
    campaign_id: str | None
    truth_heat: int


def episode_truth(store: EpisodeStore, truth_by_alert: Mapping[str, dict]) -> dict[str, EpisodeTruth]:
    """Per-episode ground truth: the dominant campaign among member alerts."""
    out: dict[str, EpisodeTruth] = {}
    for ep in store.episodes:
        campaigns: dict[str | None, int] = {}
        heats: dict[str | None, int] = {}
        for aid in ep.alert_ids:
            t = truth_by_alert[aid]
            cid = t["campaign_id"]
            campaigns[cid] = campaigns.get(cid, 0) + 1
            heats[cid] = max(heats.get(cid, 0), t["truth_heat"])
        cid = max(campaigns, key=lambda k: (campaigns[k], k or ""))
        out[ep.episode_id] = EpisodeTruth(cid, heats[cid] if cid is not None else 0)
    return out


def pair_truth_heat(prior_truth: EpisodeTruth, critical_truth: EpisodeTruth) -> int:
    """Heat a prior episode deserves relative to a critical one, per ground truth."""
    if prior_truth.campaign_id is None or critical_truth.campaign_id is None:
        return 0
    if prior_truth.campaign_id != critical_truth.campaign_id:
        return 0
    return prior_truth.truth_heat


def make_labels(
    store: EpisodeStore,
    truth: Mapping[str, EpisodeTruth],
    critical_episode_id: str,
    lookback_seconds: float | None = None,
    max_cold: int = 150,
    annotator: str = "truth",
    seed: int = 0,
) -> list[LabeledPair]:
    """Ground-truth labels for every prior episode of one critical episode.

    All campaign-related episodes are labeled, as is anything sharing a
    source with the critical episode (an analyst always grades those);
    remaining unrelated (heat 0) episodes are downsampled to ``max_cold``
    so label sets stay at analyst scale.
    """
    critical = store.get(critical_episode_id)
    crit_truth = truth[critical_episode_id]
    kept: list[LabeledPair] = []
    cold: list[LabeledPair] = []
    for ep in store.prior_episodes(critical.peak_time, lookback_seconds):
        heat = pair_truth_heat(truth[ep.episode_id], crit_truth)
        lp = LabeledPair(critical_episode_id, ep.episode_id, heat, annotator)
        if heat > 0 or ep.sources & critical.sources:
            kept.append(lp)
        else:
            cold.append(lp)
    if len(cold) > max_cold:
        rng = random.Random(seed)
        cold = rng.sample(cold, max_cold)
    return sorted(kept + cold, key=lambda lp: lp.prior_episode_id)
