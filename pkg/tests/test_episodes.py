import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import heattriage as ht
from heattriage.episodes import Histogram, SmoothingConfig, _local_maxima, _split_bins
from heattriage.errors import ValidationError
from heattriage.synth import asn_entries


def eve_lines_at(times, key="10.0.0.1"):
    import json

    return [
        json.dumps(
            {
                "timestamp": float(t),
                "event_type": "alert",
                "src_ip": key,
                "dest_ip": "10.0.2.9",
                "dest_port": 80,
                "alert": {
                    "signature": "ET SCAN Potential SSH Scan",
                    "signature_id": 2001219,
                    "category": "Attempted Information Leak",
                    "severity": 2,
                },
            }
        )
        for t in times
    ]


def alerts_at(times, key="10.0.0.1"):
    alerts, _ = ht.parse_eve_stream(eve_lines_at(times, key))
    return sorted(alerts, key=lambda a: (a.timestamp, a.id))


class TestHistogram:
    def test_single_alert_single_bin(self):
        hist = ht.build_histogram(alerts_at([30.0]), "10.0.0.1", "discovery", SmoothingConfig())
        assert hist.counts.tolist() == [1]
        assert hist.t0 == 0.0

    def test_ten_alerts_one_bin(self):
        hist = ht.build_histogram(
            alerts_at([100 + i for i in range(10)]), "10.0.0.1", "discovery", SmoothingConfig()
        )
        assert hist.counts.sum() == 10
        assert hist.counts.max() == 10

    def test_hand_counted_bins(self):
        # bin width 60: t=0 lands in bin 0; t=61 and t=62 land in bin 1
        hist = ht.build_histogram(alerts_at([0.0, 61.0, 62.0]), "k", "discovery", SmoothingConfig(bin_width=60))
        assert hist.counts.tolist() == [1, 2]

    def test_total_mass_preserved(self):
        times = np.linspace(0, 4000, 137)
        hist = ht.build_histogram(alerts_at(times), "k", "discovery", SmoothingConfig())
        assert hist.counts.sum() == 137

    def test_empty_group_rejected(self):
        with pytest.raises(ValidationError):
            ht.build_histogram([], "k", "discovery", SmoothingConfig())


def brute_force_convolve(series, sigma, truncation=3.0):
    """Independent direct-sum convolution oracle."""
    import math

    radius = max(1, int(math.ceil(truncation * sigma)))
    weights = [math.exp(-0.5 * (i / sigma) ** 2) for i in range(-radius, radius + 1)]
    total = sum(weights)
    weights = [w / total for w in weights]
    out = []
    n = len(series)
    for i in range(n):
        acc = 0.0
        for k, w in zip(range(-radius, radius + 1), weights):
            j = i - k
            if 0 <= j < n:
                acc += w * series[j]
        out.append(acc)
    return out


class TestGaussianSmooth:
    def test_impulse_becomes_symmetric_bell(self):
        # truncation 2 keeps the kernel inside the series, so all mass stays
        out = ht.gaussian_smooth(np.array([0, 0, 1, 0, 0], dtype=float), sigma_bins=1.0, truncation=2.0)
        assert out[2] == out.max()
        assert out[1] == pytest.approx(out[3])
        assert out[0] == pytest.approx(out[4])
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_impulse_default_truncation_interior(self):
        series = np.zeros(11)
        series[5] = 1.0
        out = ht.gaussian_smooth(series, sigma_bins=1.0)
        assert out[5] == out.max()
        assert np.allclose(out[:5], out[6:][::-1])
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_constant_series_passes_through_interior(self):
        out = ht.gaussian_smooth(np.full(50, 7.0), sigma_bins=2.0)
        radius = 6  # ceil(3 * 2)
        assert np.allclose(out[radius:-radius], 7.0, rtol=1e-6)

    def test_small_sigma_matches_direct_convolution(self):
        series = np.array([1, 0, 0, 0, 1], dtype=float)
        out = ht.gaussian_smooth(series, sigma_bins=0.25)
        oracle = brute_force_convolve(series.tolist(), 0.25)
        assert np.allclose(out, oracle, atol=1e-12)
        assert np.allclose(out, series, atol=0.01)

    @given(
        st.lists(st.floats(min_value=0, max_value=100), min_size=1, max_size=40),
        st.floats(min_value=0.3, max_value=4.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_oracle_and_conserves_interior_mass(self, values, sigma):
        import math

        radius = max(1, int(math.ceil(3.0 * sigma)))
        series = [0.0] * radius + values + [0.0] * radius
        out = ht.gaussian_smooth(np.array(series), sigma_bins=sigma)
        oracle = brute_force_convolve(series, sigma)
        assert np.allclose(out, oracle, atol=1e-9)
        total = sum(values)
        if total > 0:
            assert abs(out.sum() - total) / total < 1e-6

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValidationError):
            ht.gaussian_smooth(np.ones(3), sigma_bins=0.0)


def brute_force_minimum_between(smoothed, a, b):
    best, best_val = None, None
    for i in range(a + 1, b):
        if best_val is None or smoothed[i] < best_val:
            best, best_val = i, smoothed[i]
    return best


class TestSegmentation:
    def test_unimodal_single_episode(self):
        alerts = alerts_at([0, 10, 20, 60, 70, 80, 130])
        hist = ht.build_histogram(alerts, "10.0.0.1", "discovery", SmoothingConfig())
        smoothed = ht.gaussian_smooth(hist.counts, 2.0)
        episodes = ht.segment_episodes(hist, smoothed, alerts, "10.0.0.1", "discovery")
        assert len(episodes) == 1
        assert episodes[0].alert_count == 7

    def test_bimodal_splits_at_brute_force_minimum(self):
        burst1 = [float(t) for t in range(0, 300, 30)]
        burst2 = [float(t) for t in range(3600, 3900, 30)]
        alerts = alerts_at(burst1 + burst2)
        cfg = SmoothingConfig(bin_width=60)
        hist = ht.build_histogram(alerts, "10.0.0.1", "discovery", cfg)
        smoothed = ht.gaussian_smooth(hist.counts, 2.0)
        episodes = ht.segment_episodes(hist, smoothed, alerts, "10.0.0.1", "discovery")
        assert len(episodes) == 2
        assert episodes[0].alert_count == len(burst1)
        assert episodes[1].alert_count == len(burst2)
        peaks = _local_maxima(smoothed)
        split = brute_force_minimum_between(smoothed, peaks[0], peaks[-1])
        assert episodes[0].end_time < hist.t0 + (split + 1) * cfg.bin_width
        assert episodes[1].start_time > hist.t0 + split * cfg.bin_width

    def test_boundary_alert_goes_to_earlier_episode(self):
        smoothed = np.array([5.0, 1.0, 5.0])
        hist = Histogram(t0=0.0, bin_width=60.0, counts=np.array([5, 1, 5]))
        alerts = alerts_at([10, 20, 30, 40, 50, 70, 130, 140, 150, 160, 170])
        episodes = ht.segment_episodes(hist, smoothed, alerts, "10.0.0.1", "discovery")
        assert len(episodes) == 2
        # the alert at t=70 is in the shared minimum bin and joins the earlier episode
        assert episodes[0].alert_count == 6
        assert episodes[1].alert_count == 5

    def test_time_attribute_invariants(self):
        alerts = alerts_at(np.random.default_rng(3).uniform(0, 7200, 400))
        store = ht.build_all_episodes(alerts)
        for ep in store.episodes:
            assert ep.start_time <= ep.peak_time <= ep.end_time
            assert ep.alert_count == len(ep.alert_ids) >= 1
            assert ep.sources and ep.signatures

    def test_plateau_takes_leftmost_bin(self):
        assert _local_maxima(np.array([1.0, 3.0, 3.0, 1.0])) == [1]
        assert _split_bins(np.array([5.0, 2.0, 2.0, 5.0]), [0, 3]) == [1]


class TestBuildAllEpisodes:
    def test_empty_corpus(self):
        store = ht.build_all_episodes([])
        assert len(store) == 0

    def test_partition_property(self):
        rng = np.random.default_rng(5)
        lines = eve_lines_at(rng.uniform(0, 3600, 200), key="10.0.0.1") + eve_lines_at(
            rng.uniform(0, 3600, 150), key="10.0.0.2"
        )
        alerts, _ = ht.parse_eve_stream(lines)
        store = ht.build_all_episodes(alerts)
        assert sum(ep.alert_count for ep in store.episodes) == 350
        seen = set()
        for ep in store.episodes:
            assert not (ep.alert_ids & seen)
            seen |= ep.alert_ids
        assert len(seen) == 350

    def test_deterministic_ids_and_boundaries(self):
        rng = np.random.default_rng(9)
        times = rng.uniform(0, 3600, 120)
        a1 = ht.build_all_episodes(alerts_at(times))
        a2 = ht.build_all_episodes(alerts_at(times))
        assert [e.episode_id for e in a1.episodes] == [e.episode_id for e in a2.episodes]
        assert [(e.start_time, e.end_time) for e in a1.episodes] == [
            (e.start_time, e.end_time) for e in a2.episodes
        ]

    def test_store_lookup_and_dump_roundtrip(self, tmp_path):
        alerts = alerts_at([0, 10, 3600, 3610])
        store = ht.build_all_episodes(alerts)
        ep = store.episode_containing(alerts[0].id)
        assert alerts[0].id in ep.alert_ids
        path = tmp_path / "episodes.jsonl"
        store.dump_jsonl(path)
        again = ht.EpisodeStore.load_jsonl(path, alerts)
        assert [e.episode_id for e in again.episodes] == [e.episode_id for e in store.episodes]
        assert again.get(ep.episode_id) == ep

    def test_asn_mode_reduces_episode_count(self):
        spec = ht.ScenarioSpec.transfer_target(seed=4)
        scenario = ht.generate(spec)
        alerts, _ = ht.parse_eve_stream(iter(scenario.eve_lines))
        table = ht.AsnTable(asn_entries(spec))
        by_ip = ht.build_all_episodes(alerts, mode="ip")
        by_asn = ht.build_all_episodes(alerts, mode="asn", asn_table=table)
        assert len(by_asn) < len(by_ip)
        assert len(by_asn) < 0.8 * len(by_ip)
