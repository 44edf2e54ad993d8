"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to watch them go by).

Every expected value is either computed by an independent oracle inside
this module or generated from scenario ground truth; nothing is tuned to
the implementation under test.
"""

import json
import math
import random
import subprocess
import sys
import time

import numpy as np

import heattriage as ht
from heattriage.synth import asn_entries, episode_truth, make_labels
from heattriage.workspace import Workspace

from conftest import make_episode

STAGES = ht.StageVocabulary.default().stage_ids


def _line(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" -- {detail}" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}", flush=True)
    return ok


# --- independent oracles -------------------------------------------------------


def entropy_oracle(counts, base):
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log(p, base)
    return h


def conditional_entropy_oracle(pairs, base):
    n = len(pairs)
    joint, marg = {}, {}
    for a, y in pairs:
        joint[(a, y)] = joint.get((a, y), 0) + 1
        marg[y] = marg.get(y, 0) + 1
    h = 0.0
    for (a, y), c in joint.items():
        h -= (c / n) * math.log((c / n) / (marg[y] / n), base)
    return h


def build_corpus(spec, mode="ip", table=None):
    scenario = ht.generate(spec)
    alerts, stats = ht.parse_eve_stream(iter(scenario.eve_lines))
    assert stats.skipped_malformed == 0
    store = ht.build_all_episodes(alerts, mode=mode, asn_table=table)
    truth = episode_truth(store, scenario.truth_by_alert)
    return scenario, store, truth


def train_on_first_campaign(scenario, store, truth, **label_kw):
    ioc = ht.resolve_ioc(store, alert_id=scenario.ioc_alert_id("c1"))
    labels = make_labels(store, truth, ioc.critical_episode_id, **label_kw)
    return ht.train(labels, store, STAGES), labels


def random_episode(rng, eid, peak_span=200000.0):
    peak = float(rng.uniform(0, peak_span))
    pool = [
        f"10.{int(rng.integers(0, 6))}.{int(rng.integers(0, 6))}.{int(rng.integers(1, 7))}"
        for _ in range(6)
    ]
    k_src = int(rng.integers(1, 4))
    k_tgt = int(rng.integers(1, 4))
    return make_episode(
        eid,
        stage=STAGES[int(rng.integers(0, len(STAGES)))],
        peak=peak,
        start=peak - float(rng.uniform(1, 400)),
        end=peak + float(rng.uniform(1, 400)),
        sources=tuple(rng.choice(pool, size=k_src, replace=False)),
        targets=tuple(rng.choice(pool, size=k_tgt, replace=False)),
        signatures=tuple(f"SIG {int(s)}" for s in rng.integers(0, 8, size=int(rng.integers(1, 4)))),
        ports=tuple(int(p) for p in rng.integers(1, 1024, size=int(rng.integers(0, 3)))),
    )


def linear_training_world(n=48):
    critical = make_episode("crit", stage="exfiltration", peak=500000.0, sources=("A", "B", "C"))
    episodes = [critical]
    labels = []
    pools = {0: (), 1: ("A",), 2: ("A", "B"), 3: ("A", "B", "C")}
    for i in range(n):
        heat = i % 4
        shared = pools[heat]
        extra = tuple(f"X{i}.{j}" for j in range(3 - len(shared)))
        episodes.append(
            make_episode(f"p{i}", stage=STAGES[i % 3], peak=1000.0 + 41.0 * i, sources=shared + extra)
        )
        labels.append(ht.LabeledPair("crit", f"p{i}", heat))
    return ht.EpisodeStore(episodes), labels


# --- criteria ------------------------------------------------------------------


def test_entropy_oracle():
    """entropy/conditional_entropy vs brute force on 1,000 random dists, <= 1e-9, < 5 s."""
    rng = random.Random(101)
    t0 = time.time()
    worst = 0.0
    for _ in range(1000):
        counts = [rng.randint(0, 60) for _ in range(rng.randint(1, 14))]
        base = rng.randint(2, 20)
        worst = max(worst, abs(ht.entropy(counts, base) - entropy_oracle(counts, base)))
        n_pairs = rng.randint(1, 40)
        pairs = [(f"s{rng.randint(0, 6)}", rng.randint(0, 3)) for _ in range(n_pairs)]
        worst = max(
            worst, abs(ht.conditional_entropy(pairs, base) - conditional_entropy_oracle(pairs, base))
        )
    uniform_ok = all(
        ht.entropy({f"s{i}": 1 for i in range(n)}, base=n) == 1.0 for n in (2, 5, 9, 13)
    )
    elapsed = time.time() - t0
    ok = worst <= 1e-9 and uniform_ok and elapsed < 5.0
    assert _line(
        "entropy-oracle", ok, f"max|err|={worst:.2e}, uniform exact={uniform_ok}, {elapsed:.2f}s"
    )


def test_gain_identity():
    """gain == acg + nrg - coh exactly, coh >= 0, acg >= 0 on 100 random triples."""
    rng = random.Random(202)
    np_rng = np.random.default_rng(202)
    ok = True
    for trial in range(100):
        n = rng.randint(2, 40)
        eps = [make_episode("crit", stage=rng.choice(STAGES), peak=10**9, alert_ids=("a0",))]
        eps += [random_episode(np_rng, f"w{trial}-{i}") for i in range(n)]
        store = ht.EpisodeStore(eps)
        members = sorted(rng.sample(range(n), rng.randint(0, n)))
        heated = tuple((f"w{trial}-{i}", rng.uniform(0.01, 3.0)) for i in members)
        hac = ht.Hac(ht.Ioc("a0", "crit"), "heat-model", None, 0.0, heated)
        training = [(rng.choice(STAGES), rng.randint(0, 3)) for _ in range(rng.randint(1, 50))]
        report = ht.compute_gain(hac, store, training, n_stages=len(STAGES))
        ok &= report.gain == report.acg + report.nrg - report.coh
        ok &= report.acg >= 0.0 and report.coh >= 0.0
    assert _line("gain-identity", ok, "100 randomized HAC/window/training triples")


def test_partition_property():
    """Episodes partition alerts exactly on 20 synthetic corpora."""
    ok = True
    checked = 0
    for seed in range(1, 21):
        spec = ht.ScenarioSpec(seed=seed, duration=1500.0, noise_rate=1.0, n_attackers=2)
        _, store, _ = build_corpus(spec)
        total = sum(ep.alert_count for ep in store.episodes)
        ids = [aid for ep in store.episodes for aid in ep.alert_ids]
        ok &= total == len(store.alerts)
        ok &= len(ids) == len(set(ids)) == len(store.alerts)
        checked += 1
    assert _line("partition-property", ok, f"{checked} seeds, disjoint ids, counts sum to totals")


def test_network_agnostic_invariance():
    """IP renaming leaves 200 random pairs' features bit-identical and predictions equal."""
    store, labels = linear_training_world()
    model = ht.train(labels, store, STAGES)
    fz = ht.PairFeaturizer(STAGES)
    rng = np.random.default_rng(404)
    ok = True
    for i in range(200):
        prior = random_episode(rng, f"p{i}")
        crit = random_episode(rng, f"c{i}")
        ips = sorted(prior.sources | prior.targets | crit.sources | crit.targets)
        mapping = {ip: f"192.168.{j // 200}.{j % 200 + 1}" for j, ip in enumerate(ips)}

        def rename(ep, eid):
            return make_episode(
                eid, stage=ep.stage, peak=ep.peak_time, start=ep.start_time, end=ep.end_time,
                sources=tuple(mapping[s] for s in ep.sources),
                targets=tuple(mapping[t] for t in ep.targets),
                signatures=tuple(ep.signatures), ports=tuple(ep.dst_ports),
            )

        rp, rc = rename(prior, f"rp{i}"), rename(crit, f"rc{i}")
        ok &= (fz.features(prior, crit).to_vector() == fz.features(rp, rc).to_vector()).all()
        ok &= model.predict(prior, crit) == model.predict(rp, rc)
    assert _line("network-agnostic-invariance", ok, "200 pairs, bit-identical features")


def test_planted_campaign_extraction():
    """Recall >= 0.8 at threshold 0.5; heat gain beats all 3 baselines in >= 8/10 seeds; < 2 min."""
    t0 = time.time()
    seed_wins = 0
    recall_hits = 0
    recall_total = 0
    for seed in range(1, 11):
        scenario, store, truth = build_corpus(ht.ScenarioSpec(seed=seed))
        model, _ = train_on_first_campaign(scenario, store, truth)
        heat_gains = []
        baseline_gains = {m: [] for m in ("src-match", "tgt-match", "src-and-tgt-match")}
        for cid in ("c2", "c3"):
            ioc = ht.resolve_ioc(store, alert_id=scenario.ioc_alert_id(cid))
            crit = store.get(ioc.critical_episode_id)
            hac = ht.extract_hac(ioc, model, store, threshold=0.5)
            planted = [
                ep.episode_id
                for ep in store.prior_episodes(crit.peak_time)
                if truth[ep.episode_id].campaign_id == cid and truth[ep.episode_id].truth_heat > 0
            ]
            got = set(hac.episode_ids)
            recall_hits += sum(1 for p in planted if p in got)
            recall_total += len(planted)
            heat_gains.append(
                ht.compute_gain(hac, store, model.training_stage_pairs, len(STAGES)).gain
            )
            for method in baseline_gains:
                baseline = ht.extract_baseline(ioc, store, method)
                baseline_gains[method].append(
                    ht.compute_gain(baseline, store, model.training_stage_pairs, len(STAGES)).gain
                )
        mean_heat = sum(heat_gains) / len(heat_gains)
        if all(mean_heat > sum(v) / len(v) for v in baseline_gains.values()):
            seed_wins += 1
    recall = recall_hits / recall_total
    elapsed = time.time() - t0
    ok = recall >= 0.8 and seed_wins >= 8 and elapsed < 120.0
    assert _line(
        "planted-campaign-extraction",
        ok,
        f"recall={recall:.3f}, gain wins {seed_wins}/10, {elapsed:.1f}s",
    )


def test_transfer_fine_tune():
    """Fine-tuning with <= 125 labels reduces mean coherence in >= 8/10 seeds."""
    wins = 0
    max_labels = 0
    for seed in range(1, 11):
        scenario_a, store_a, truth_a = build_corpus(ht.ScenarioSpec(seed=seed))
        base, _ = train_on_first_campaign(scenario_a, store_a, truth_a)
        spec_b = ht.ScenarioSpec.transfer_target(seed=seed + 1000)
        table = ht.AsnTable(asn_entries(spec_b))
        scenario_b, store_b, truth_b = build_corpus(spec_b, mode="asn", table=table)
        ioc1 = ht.resolve_ioc(store_b, alert_id=scenario_b.ioc_alert_id("c1"))
        new_labels = make_labels(store_b, truth_b, ioc1.critical_episode_id, max_cold=20)
        assert len(new_labels) <= 125
        max_labels = max(max_labels, len(new_labels))
        tuned = ht.fine_tune(base, new_labels, store_b)
        coh_base, coh_tuned = [], []
        for cid in ("c2", "c3"):
            ioc = ht.resolve_ioc(store_b, alert_id=scenario_b.ioc_alert_id(cid))
            for model, sink in ((base, coh_base), (tuned, coh_tuned)):
                hac = ht.extract_hac(ioc, model, store_b, threshold=0.5)
                report = ht.compute_gain(hac, store_b, model.training_stage_pairs, len(STAGES))
                sink.append(report.coh)
        if sum(coh_tuned) / len(coh_tuned) < sum(coh_base) / len(coh_base):
            wins += 1
    ok = wins >= 8
    assert _line("transfer-fine-tune", ok, f"coherence reduced in {wins}/10 seeds, <= {max_labels} labels")


def test_model_contract():
    """cv_mse <= 0.05 on separable labels; outputs in [0,3]; save/load identical on 500 pairs."""
    store, labels = linear_training_world()
    model = ht.train(labels, store, STAGES)
    cv_ok = model.cv_mse <= 0.05

    rng = np.random.default_rng(707)
    probe = [(random_episode(rng, f"pp{i}"), random_episode(rng, f"pc{i}")) for i in range(500)]
    preds = model.predict_pairs(probe)
    range_ok = bool(((preds >= 0.0) & (preds <= 3.0)).all())

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        path = f"{tmp}/model.json"
        model.save(path)
        again = ht.HeatModel.load(path)
        roundtrip_ok = bool((again.predict_pairs(probe) == preds).all())
    ok = cv_ok and range_ok and roundtrip_ok
    assert _line(
        "model-contract",
        ok,
        f"cv_mse={model.cv_mse:.4f}, range ok={range_ok}, 500-pair roundtrip identical={roundtrip_ok}",
    )


def test_threshold_monotonicity():
    """HAC size non-increasing as threshold sweeps 0 to 3 in 0.1 steps, 50 random IoCs."""
    spec = ht.ScenarioSpec(seed=77, duration=1800.0, noise_rate=0.8, n_attackers=2)
    scenario, store, truth = build_corpus(spec)
    model, _ = train_on_first_campaign(scenario, store, truth)
    rng = random.Random(77)
    alert_ids = rng.sample(sorted(store.alerts), 50)
    thresholds = [round(0.1 * i, 1) for i in range(31)]
    ok = True
    for aid in alert_ids:
        ioc = ht.resolve_ioc(store, alert_id=aid)
        sizes = [len(ht.extract_hac(ioc, model, store, threshold=t)) for t in thresholds]
        ok &= sizes == sorted(sizes, reverse=True)
    assert _line("threshold-monotonicity", ok, "50 IoCs x 31 thresholds")


def test_cli_service_parity(tmp_path):
    """CLI --json output content-equals service responses for rank and gain."""
    from fastapi.testclient import TestClient

    from heattriage.service import create_app

    corpus_dir = tmp_path / "corpus"
    ws_dir = tmp_path / "ws"
    spec = ht.ScenarioSpec(seed=88, duration=3600.0, noise_rate=0.7, n_attackers=2)
    scenario = ht.generate(spec)
    scenario.write(corpus_dir)

    def cli(*args):
        proc = subprocess.run(
            [sys.executable, "-m", "heattriage.cli", "--workspace", str(ws_dir), *args],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    cli("ingest", str(corpus_dir / "eve.json"))
    ws = Workspace(ws_dir)
    store = ws.store()
    truth = episode_truth(store, scenario.truth_by_alert)
    ioc1 = ht.resolve_ioc(store, alert_id=scenario.ioc_alert_id("c1"))
    labels = make_labels(store, truth, ioc1.critical_episode_id)
    label_file = tmp_path / "labels.jsonl"
    label_file.write_text("\n".join(json.dumps(lp.to_dict()) for lp in labels) + "\n")
    cli("label", "--ioc", ioc1.critical_alert_id, "--from-file", str(label_file))
    cli("train")

    eval_ioc = scenario.ioc_alert_id("c2")
    sig = store.alerts[eval_ioc].signature
    cli_rank = json.loads(cli("rank", "--signature", sig, "--json"))
    cli_gain = json.loads(cli("gain", "--ioc", eval_ioc, "--json"))

    client = TestClient(create_app(Workspace(ws_dir)))
    svc_rank = client.get("/rank", params={"signature": sig}).json()
    svc_gain = client.get(f"/gain/{eval_ioc}").json()

    rank_ok = cli_rank == svc_rank
    gain_ok = cli_gain == svc_gain
    ok = rank_ok and gain_ok and len(cli_rank["ranked"]) >= 1
    assert _line("cli-service-parity", ok, f"rank equal={rank_ok}, gain equal={gain_ok}")
