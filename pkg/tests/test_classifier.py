"""
Tests for the optimizer, the cosine schedule and the linear classifier.
"""

import numpy as np
import pytest

from core.classifier import TrainConfig, TrainingHistory, predict_proba, train_linear
from core.exceptions import ArgumentError, DegenerateLabelError, EmptySetError, ShapeError
from core.features import EEG31_LAYOUT, FeatureMatrix
from core.metrics import compute_metrics
from core.optim import AdamW, cosine_lr


def _clusters(rng, n, shift=3.0, n_features=31):
    labels = np.arange(n) % 2
    values = rng.standard_normal((n, n_features))
    values[:, :3] += shift * labels[:, None]
    subjects = [f"S{i % 10}" for i in range(n)]
    return FeatureMatrix(values, EEG31_LAYOUT, labels, subjects, ["a", "b"])


class TestSchedule:

    @pytest.mark.parametrize("epoch,expected", [(0, 1.0), (5, 0.5), (10, 0.0)])
    def test_cosine_lr(self, epoch, expected):
        assert cosine_lr(1.0, epoch, 10) == pytest.approx(expected, abs=1e-12)

    def test_monotone(self):
        values = [cosine_lr(1e-3, e, 50) for e in range(50)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestAdamW:

    def test_first_step_moves_by_lr(self):
        params = {"w": np.array([1.0, -1.0])}
        opt = AdamW(params, weight_decay=0.0)
        opt.step(params, {"w": np.array([0.5, -2.0])}, lr=0.1)
        np.testing.assert_allclose(params["w"], [0.9, -0.9], atol=1e-6)

    def test_decoupled_decay_and_exclusions(self):
        params = {"w": np.array([2.0]), "b": np.array([2.0])}
        opt = AdamW(params, weight_decay=0.1, no_decay=("b",))
        opt.step(params, {"w": np.zeros(1), "b": np.zeros(1)}, lr=0.5)
        np.testing.assert_allclose(params["w"], [2.0 - 0.5 * 0.1 * 2.0])
        np.testing.assert_allclose(params["b"], [2.0])


class TestTrainConfig:

    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.batch_size, cfg.max_epochs, cfg.patience) == (128, 200, 15)
        assert cfg.lr == 1e-4
        assert cfg.weight_decay == 0.01
        assert cfg.validate() == (True, [])

    def test_invalid(self):
        with pytest.raises(ArgumentError):
            TrainConfig(lr=0.0, patience=500).ensure_valid()


class TestTrainLinear:

    def _cfg(self, **overrides):
        base = dict(lr=0.05, max_epochs=60, patience=10, batch_size=32, seed=3)
        base.update(overrides)
        return TrainConfig(**base)

    def test_learns_separable_data(self, rng):
        train, valid, test = _clusters(rng, 200), _clusters(rng, 60), _clusters(rng, 100)
        model = train_linear(train, valid, self._cfg())
        metrics = compute_metrics(predict_proba(model, test), test.labels)
        assert metrics.accuracy > 0.9
        assert metrics.auroc > 0.95

    def test_history(self, rng):
        train, valid = _clusters(rng, 200), _clusters(rng, 60)
        model = train_linear(train, valid, self._cfg(max_epochs=200, patience=5))
        h = model.history
        assert h.stopped_early
        assert len(h.train_loss) < 200
        assert h.best_valid_f1 == max(h.valid_f1)
        assert h.valid_f1[h.best_epoch] == h.best_valid_f1
        assert h.train_loss[-1] < h.initial_loss
        assert h.best_train_loss <= h.initial_loss
        assert len(h.valid_loss) == len(h.valid_f1)
        assert h.lr[0] == pytest.approx(0.05)

    def test_deterministic(self, rng):
        train, valid = _clusters(rng, 120), _clusters(rng, 40)
        a = train_linear(train, valid, self._cfg())
        b = train_linear(train, valid, self._cfg())
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)

    def test_probabilities(self, rng):
        train, valid = _clusters(rng, 120), _clusters(rng, 40)
        model = train_linear(train, valid, self._cfg())
        probs = predict_proba(model, valid)
        assert probs.shape == (40, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        with pytest.raises(ShapeError):
            predict_proba(model, np.zeros((3, 30)))

    def test_standardization_uses_train_statistics(self, rng):
        train, valid = _clusters(rng, 120), _clusters(rng, 40)
        model = train_linear(train, valid, self._cfg(max_epochs=2))
        np.testing.assert_allclose(model.feature_mean, train.values.mean(axis=0))
        np.testing.assert_allclose(model.feature_std, train.values.std(axis=0))

    def test_single_class(self, rng):
        train = _clusters(rng, 40)
        train = train.with_labels(np.zeros(40, dtype=int))
        with pytest.raises(DegenerateLabelError):
            train_linear(train, _clusters(rng, 20), self._cfg())

    def test_feature_mismatch(self, rng):
        with pytest.raises(ShapeError):
            train_linear(_clusters(rng, 40), _clusters(rng, 20, n_features=62), self._cfg())

    def test_empty_valid(self, rng):
        valid = _clusters(rng, 20).subset(np.array([], dtype=int))
        with pytest.raises(EmptySetError):
            train_linear(_clusters(rng, 40), valid, self._cfg())


class TestCheckpointSelection:

    def _constant_features(self, n_minority, n_majority):
        labels = np.array([0] * n_minority + [1] * n_majority)
        values = np.zeros((len(labels), 31))
        subjects = [f"S{i % 8}" for i in range(len(labels))]
        return FeatureMatrix(values, EEG31_LAYOUT, labels, subjects, ["rare", "common"])

    def test_all_zero_features_predict_class_prior(self):
        train = self._constant_features(70, 170)
        valid = self._constant_features(35, 85)
        cfg = TrainConfig(batch_size=512, lr=0.05, max_epochs=200, patience=200, weight_decay=0.0)
        model = train_linear(train, valid, cfg)

        probs = predict_proba(model, train)
        np.testing.assert_allclose(probs, np.tile([70 / 240, 170 / 240], (240, 1)), atol=0.01)
        assert np.mean(probs.argmax(axis=1) == train.labels) == pytest.approx(170 / 240)
        assert model.history.best_epoch > 0

    def test_flat_f1_keeps_lowest_validation_loss(self):
        train = self._constant_features(70, 170)
        valid = self._constant_features(35, 85)
        model = train_linear(train, valid, TrainConfig(batch_size=512, lr=0.05, max_epochs=100, patience=100))
        h = model.history
        flat = [i for i, f1 in enumerate(h.valid_f1) if f1 == h.best_valid_f1]
        assert h.best_epoch == min(flat, key=lambda i: h.valid_loss[i])
        assert h.best_valid_loss == min(h.valid_loss[i] for i in flat)

    def test_record_tie_rules(self):
        h = TrainingHistory()
        assert h.record(0, 0.9, 0.5, 0.8, 1e-3) == (True, True)
        assert h.record(1, 0.8, 0.5, 0.7, 1e-3) == (True, False)
        assert h.record(2, 0.7, 0.5, 0.75, 1e-3) == (False, False)
        assert h.record(3, 0.6, 0.6, 0.9, 1e-3) == (True, True)
        assert (h.best_epoch, h.best_train_loss) == (3, 0.6)
