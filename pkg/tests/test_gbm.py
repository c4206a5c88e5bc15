import json
import math

import numpy as np
import pytest

from whatif.evaluation import auroc
from whatif.gbm import (
    GbmConfig,
    GbmModel,
    ModelError,
    cross_validate,
    logistic_loss,
    stratified_folds,
    train,
)
from whatif.schema import Dataset, infer_schema

from conftest import separable_dataset


def small_config(**kw):
    base = dict(n_trees=40, max_depth=3, learning_rate=0.2, l2_leaf_penalty=1.0, min_samples_leaf=5, seed=0)
    base.update(kw)
    return GbmConfig(**base)


def planted_binary_dataset(n=300, seed=0):
    """Label equals one binary feature; a second feature is pure noise."""
    rng = np.random.default_rng(seed)
    sig = rng.integers(0, 2, n)
    noise = rng.uniform(0, 1, n)
    rows = [(int(sig[i]), float(noise[i])) for i in range(n)]
    return Dataset(infer_schema(["signal", "noise"], rows), tuple(rows), tuple(int(v) for v in sig))


class TestTrain:
    def test_zero_trees_predicts_base_rate(self):
        ds = separable_dataset(n=100, seed=1)
        model = train(ds, small_config(n_trees=0))
        rate = np.mean(ds.labels)
        p = model.predict_proba(ds.rows)
        assert np.allclose(p[:, 1], rate)

    def test_separable_training_auroc(self):
        ds = separable_dataset(n=500, seed=2)
        model = train(ds, small_config())
        p = model.predict_proba(ds.rows)[:, 1]
        assert auroc(p, ds.labels) >= 0.99

    def test_permuted_labels_heldout_auroc_near_half(self):
        ds = separable_dataset(n=500, seed=3)
        rng = np.random.default_rng(7)
        permuted = tuple(int(v) for v in rng.permutation(ds.labels))
        shuffled = Dataset(ds.schema, ds.rows, permuted)
        split = int(0.7 * shuffled.n_rows)
        model = train(shuffled.subset(range(split)), small_config())
        rows = shuffled.rows[split:]
        p = model.predict_proba(rows)[:, 1]
        a = auroc(p, shuffled.labels[split:])
        assert 0.40 <= a <= 0.60

    def test_degenerate_labels(self):
        ds = separable_dataset(n=50, seed=4)
        ones = Dataset(ds.schema, ds.rows, (1,) * ds.n_rows)
        with pytest.raises(ModelError, match="degenerate"):
            train(ones, small_config())

    def test_determinism_bit_identical(self):
        ds = separable_dataset(n=200, seed=5)
        a = train(ds, small_config())
        b = train(ds, small_config())
        assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)

    def test_training_loss_monotone(self):
        ds = separable_dataset(n=300, seed=6)
        model = train(ds, small_config(n_trees=60))
        losses = model.training_loss
        assert all(losses[i + 1] <= losses[i] + 1e-9 for i in range(len(losses) - 1))

    def test_huge_l2_collapses_to_prior(self):
        ds = separable_dataset(n=300, seed=7)
        prior = train(ds, small_config(n_trees=0))
        heavy = train(ds, GbmConfig(n_trees=200, max_depth=3, learning_rate=0.1, l2_leaf_penalty=1e6, min_samples_leaf=5))
        p0 = prior.predict_proba(ds.rows)[:, 1]
        p1 = heavy.predict_proba(ds.rows)[:, 1]
        assert np.max(np.abs(p0 - p1)) < 1e-3


class TestPredict:
    def test_prior_only_symmetric(self):
        rows = [(0.0,), (1.0,)] * 25
        ds = Dataset(infer_schema(["x"], rows), tuple(rows), tuple([0, 1] * 25))
        model = train(ds, small_config(n_trees=0))
        p = model.predict_proba([(0.3,)])
        assert p[0, 0] == pytest.approx(0.5)
        assert p[0, 1] == pytest.approx(0.5)

    def test_components_sum_to_one(self, rng):
        ds = separable_dataset(n=200, seed=8)
        model = train(ds, small_config())
        rows = [(float(rng.uniform(0, 1)), float(rng.uniform(0, 1))) for _ in range(500)]
        p = model.predict_proba(rows)
        assert np.all(p >= 0) and np.all(p <= 1)
        assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-9

    def test_hand_built_depth_one_tree(self):
        # one split on x at 0.5: leaf logits -1.3 (left) and +0.7 (right), base 0.2
        tree = {
            "feature": 0,
            "op": "le",
            "threshold": 0.5,
            "gain": 1.0,
            "left": {"value": -1.3},
            "right": {"value": 0.7},
        }
        model = GbmModel(
            base_score=0.2,
            trees=(tree,),
            feature_names=("x",),
            feature_kinds=("numeric",),
            schema_fingerprint="t",
        )
        for x, leaf in ((0.1, -1.3), (0.9, 0.7)):
            expected = 1.0 / (1.0 + math.exp(-(0.2 + leaf)))
            assert model.predict_proba([(x,)])[0, 1] == pytest.approx(expected, abs=1e-12)

    def test_schema_mismatch(self):
        ds = separable_dataset(n=100, seed=9)
        model = train(ds, small_config())
        with pytest.raises(ModelError, match="mismatch"):
            model.predict_proba([(0.1, 0.2, 0.3)])


class TestImportance:
    def test_prior_only_all_zero(self):
        ds = separable_dataset(n=100, seed=10)
        model = train(ds, small_config(n_trees=0))
        assert set(model.feature_importance().values()) == {0.0}

    def test_planted_signal_dominates(self):
        ds = planted_binary_dataset()
        model = train(ds, small_config())
        imp = model.feature_importance()
        assert imp["signal"] >= 0.9

    def test_normalized_sum(self):
        ds = separable_dataset(n=200, seed=11)
        model = train(ds, small_config())
        assert sum(model.feature_importance().values()) == pytest.approx(1.0, abs=1e-9)


class TestPersistence:
    def test_roundtrip_bit_exact(self, tmp_path):
        ds = separable_dataset(n=200, seed=12)
        model = train(ds, small_config())
        path = tmp_path / "model.json"
        model.save(path)
        again = GbmModel.load(path)
        rows = ds.rows
        assert np.array_equal(model.predict_proba(rows), again.predict_proba(rows))
        again.save(tmp_path / "model2.json")
        assert (tmp_path / "model.json").read_bytes() == (tmp_path / "model2.json").read_bytes()

    def test_version_check(self):
        with pytest.raises(ModelError):
            GbmModel.from_json({"version": 99})


class TestCrossValidate:
    def test_folds_partition_rows(self):
        ds = separable_dataset(n=137, seed=13)
        folds = stratified_folds(ds.labels, 5, seed=0)
        joined = np.sort(np.concatenate(folds))
        assert np.array_equal(joined, np.arange(ds.n_rows))

    def test_separable_every_fold_strong(self):
        ds = separable_dataset(n=400, seed=14)
        scores = cross_validate(ds, small_config(), folds=5)
        assert len(scores) == 5
        assert min(scores) >= 0.95

    def test_single_class_fold_errors(self):
        # 2 positives cannot stratify across 5 folds
        rows = [(float(i),) for i in range(20)]
        labels = tuple([1, 1] + [0] * 18)
        ds = Dataset(infer_schema(["x"], rows), tuple(rows), labels)
        with pytest.raises(ModelError, match="single class"):
            cross_validate(ds, small_config(min_samples_leaf=2), folds=5)

    def test_config_bounds(self):
        with pytest.raises(ModelError):
            GbmConfig(learning_rate=0.0)
        with pytest.raises(ModelError):
            GbmConfig(l2_leaf_penalty=-1.0)
        with pytest.raises(ModelError):
            GbmConfig(n_trees=-1)


def test_logistic_loss_sane():
    y = np.array([0.0, 1.0])
    assert logistic_loss(y, np.array([0.5, 0.5])) == pytest.approx(math.log(2.0))
