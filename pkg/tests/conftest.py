import pytest

import heattriage as ht
from heattriage.synth import episode_truth, make_labels


def make_episode(
    episode_id="e1",
    key="10.0.0.1",
    stage="discovery",
    peak=1000.0,
    start=None,
    end=None,
    sources=("10.0.0.1",),
    targets=("10.0.2.5",),
    signatures=("SIG A",),
    ports=(80,),
    alert_ids=None,
):
    start = peak - 30.0 if start is None else start
    end = peak + 30.0 if end is None else end
    if alert_ids is None:
        alert_ids = (f"alert-of-{episode_id}",)
    return ht.Episode(
        episode_id=episode_id,
        key=key,
        stage=stage,
        peak_time=peak,
        start_time=start,
        end_time=end,
        sources=frozenset(sources),
        targets=frozenset(targets),
        signatures=frozenset(signatures),
        dst_ports=frozenset(ports),
        alert_ids=frozenset(alert_ids),
        alert_count=len(alert_ids),
    )


@pytest.fixture(scope="session")
def desk_pipeline():
    """One desk-scale scenario taken through ingest, episodes, truth, and training."""
    scenario = ht.generate(ht.ScenarioSpec(seed=11))
    alerts, stats = ht.parse_eve_stream(iter(scenario.eve_lines))
    store = ht.build_all_episodes(alerts)
    truth = episode_truth(store, scenario.truth_by_alert)
    vocab = ht.StageVocabulary.default()
    ioc1 = ht.resolve_ioc(store, alert_id=scenario.ioc_alert_id("c1"))
    labels = make_labels(store, truth, ioc1.critical_episode_id)
    model = ht.train(labels, store, vocab.stage_ids)
    return {
        "scenario": scenario,
        "alerts": alerts,
        "stats": stats,
        "store": store,
        "truth": truth,
        "vocab": vocab,
        "labels": labels,
        "model": model,
    }
