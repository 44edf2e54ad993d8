import json

import numpy as np
import pytest

import heattriage as ht
from heattriage.errors import ValidationError
from heattriage.model import HEAT_LEVELS, stratified_folds

from conftest import make_episode

STAGES = ["discovery", "exploitation", "exfiltration", "benign", "unmapped"]


def linear_store_and_labels(n=40):
    """Labels whose heat is an exact function of the source-overlap ratio.

    The prior episode's sources overlap the critical's {A,B,C} in
    0/1/2/3 addresses, so src_ratio determines heat = |overlap|.
    """
    critical = make_episode("crit", stage="exfiltration", peak=50000.0, sources=("A", "B", "C"))
    episodes = [critical]
    labels = []
    pools = {0: (), 1: ("A",), 2: ("A", "B"), 3: ("A", "B", "C")}
    for i in range(n):
        heat = i % 4
        shared = pools[heat]
        extra = tuple(f"X{i}.{j}" for j in range(3 - len(shared)))
        ep = make_episode(
            f"p{i}",
            stage=STAGES[i % 3],
            peak=1000.0 + 37.0 * i,
            sources=shared + extra,
        )
        episodes.append(ep)
        labels.append(ht.LabeledPair("crit", f"p{i}", heat))
    return ht.EpisodeStore(episodes), labels


class TestTrain:
    def test_linear_labels_low_cv_mse(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        assert model.cv_mse <= 0.05

    def test_degenerate_labels_rejected(self):
        store, labels = linear_store_and_labels()
        flat = [ht.LabeledPair(lp.critical_episode_id, lp.prior_episode_id, 0) for lp in labels]
        with pytest.raises(ValidationError, match="degenerate"):
            ht.train(flat, store, STAGES)

    def test_too_few_labels_rejected(self):
        store, labels = linear_store_and_labels()
        with pytest.raises(ValidationError, match="at least 25"):
            ht.train(labels[:10], store, STAGES)

    def test_unresolvable_episode_rejected(self):
        store, labels = linear_store_and_labels()
        bad = labels + [ht.LabeledPair("crit", "missing-episode", 1)]
        with pytest.raises(ht.NotFoundError):
            ht.train(bad, store, STAGES)

    def test_training_determinism(self):
        store, labels = linear_store_and_labels()
        m1 = ht.train(labels, store, STAGES)
        m2 = ht.train(labels, store, STAGES)
        assert m1.cv_mse == m2.cv_mse
        probe = [(store.get(f"p{i}"), store.get("crit")) for i in range(20)]
        assert (m1.predict_pairs(probe) == m2.predict_pairs(probe)).all()

    def test_memorization_sanity(self):
        store, labels = linear_store_and_labels(n=30)
        model = ht.train(labels, store, STAGES)
        close = 0
        for lp in labels:
            pred = model.predict(store.get(lp.prior_episode_id), store.get(lp.critical_episode_id))
            close += abs(pred - lp.heat) <= 0.5
        assert close >= 0.9 * len(labels)

    def test_mlp_family(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES, ht.Hyperparams(family="mlp", epochs=300))
        preds = model.predict_pairs([(store.get(f"p{i}"), store.get("crit")) for i in range(40)])
        assert ((preds >= 0) & (preds <= 3)).all()
        assert model.cv_mse < 1.0


class TestPredict:
    def test_output_clipped_to_range(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        rng = np.random.default_rng(0)
        for i in range(50):
            p = make_episode(f"q{i}", stage=STAGES[int(rng.integers(0, 5))],
                             peak=float(rng.uniform(0, 1e6)))
            heat = model.predict(p, store.get("crit"))
            assert 0.0 <= heat <= 3.0

    def test_vocabulary_mismatch_rejected(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        with pytest.raises(ValidationError):
            model.check_vocabulary(["different"])
        outside = make_episode("z", stage="lateral_movement")
        with pytest.raises(ValidationError):
            model.predict(outside, store.get("crit"))

    def test_prediction_invariant_under_ip_renaming(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        prior = make_episode("p", stage="discovery", peak=2000.0,
                             sources=("9.9.9.9",), targets=("8.8.8.8",))
        crit = make_episode("c", stage="exfiltration", peak=9000.0,
                            sources=("9.9.9.9",), targets=("7.7.7.7",))
        renamed_prior = make_episode("rp", stage="discovery", peak=2000.0,
                                     sources=("1.2.3.4",), targets=("5.6.7.8",))
        renamed_crit = make_episode("rc", stage="exfiltration", peak=9000.0,
                                    sources=("1.2.3.4",), targets=("4.3.2.1",))
        assert model.predict(prior, crit) == model.predict(renamed_prior, renamed_crit)


class TestSerialization:
    def test_save_load_identical_predictions(self, tmp_path):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        path = tmp_path / "model.json"
        model.save(path)
        again = ht.HeatModel.load(path)
        probe = [(store.get(f"p{i}"), store.get("crit")) for i in range(40)]
        assert (model.predict_pairs(probe) == again.predict_pairs(probe)).all()
        assert again.cv_mse == model.cv_mse
        assert again.training_fingerprint == model.training_fingerprint
        assert again.vocabulary_fingerprint == model.vocabulary_fingerprint

    def test_artifact_is_self_describing_json(self, tmp_path):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        path = tmp_path / "model.json"
        model.save(path)
        blob = json.loads(path.read_text())
        assert blob["format"] == "heat-model/1"
        assert set(blob) >= {"stage_ids", "standardizer", "regressor", "cv_mse",
                             "hyperparams", "training_records", "vocabulary_fingerprint"}

    def test_unknown_format_rejected(self):
        with pytest.raises(ValidationError):
            ht.HeatModel.from_dict({"format": "heat-model/99"})


class TestFineTune:
    def test_empty_new_labels_rejected(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        with pytest.raises(ValidationError):
            ht.fine_tune(model, [], store)

    def test_duplicate_keys_later_wins(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        override = ht.LabeledPair(
            labels[0].critical_episode_id, labels[0].prior_episode_id, 3, labels[0].annotator
        )
        tuned = ht.fine_tune(model, [override], store)
        assert len(tuned.labels) == len(model.labels)  # deduplicated, not grown
        stored = {lp.key: lp.heat for lp in tuned.labels}
        assert stored[override.key] == 3

    def test_fine_tune_works_without_original_store(self):
        store, labels = linear_store_and_labels()
        model = ht.train(labels, store, STAGES)
        other_critical = make_episode("oc", stage="exfiltration", peak=500000.0, sources=("Z",))
        other_prior = make_episode("op", stage="discovery", peak=400000.0, sources=("Z",))
        other_store = ht.EpisodeStore([other_critical, other_prior])
        tuned = ht.fine_tune(model, [ht.LabeledPair("oc", "op", 1)], other_store)
        assert len(tuned.labels) == len(labels) + 1


class TestLabels:
    def test_heat_domain_enforced(self):
        with pytest.raises(ValidationError):
            ht.LabeledPair("a", "b", 5)
        with pytest.raises(ValidationError):
            ht.LabeledPair("a", "a", 1)
        assert set(HEAT_LEVELS) == {0, 1, 2, 3}

    def test_dedupe_later_wins(self):
        early = ht.LabeledPair("c", "p", 1, "ann")
        late = ht.LabeledPair("c", "p", 2, "ann")
        other = ht.LabeledPair("c", "p", 3, "someone-else")
        result = ht.dedupe_labels([early, late, other])
        assert len(result) == 2
        assert {lp.heat for lp in result} == {2, 3}

    def test_stratified_folds_cover_everything(self):
        y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 2, 2, 3] * 3, dtype=float)
        folds = stratified_folds(y, 5, seed=3)
        all_idx = np.concatenate(folds)
        assert sorted(all_idx.tolist()) == list(range(len(y)))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 4  # classes dealt round-robin
