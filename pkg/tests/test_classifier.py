import mpmath
import numpy as np
import pytest

from headtrack.classifier import (
    SoftmaxModel,
    TrainConfig,
    gradient_check,
    load_features,
    load_model,
    pool_heatmap,
    predict,
    predict_batch,
    save_features,
    save_model,
    train,
)
from headtrack.errors import DegenerateDataError, DimensionMismatchError, InvariantError
from headtrack.heatmap import Heatmap
from headtrack.model import ClassLabel


def grid(cells):
    cells = np.asarray(cells, dtype=np.int64)
    return Heatmap(cells.shape[1], cells.shape[0], cells)


class TestPooling:
    def test_zero_heatmap(self):
        features = pool_heatmap(grid(np.zeros((64, 64), dtype=np.int64)), 64)
        assert features.shape == (4096,)
        assert np.all(features == 0.0)

    def test_uniform_64x64_one_pixel_regions(self):
        features = pool_heatmap(grid(np.ones((64, 64), dtype=np.int64)), 64)
        assert np.allclose(features, np.log(2.0))

    def test_additive_before_log(self, rng):
        a = rng.integers(0, 50, size=(40, 60))
        b = rng.integers(0, 50, size=(40, 60))
        sums = lambda cells: np.expm1(pool_heatmap(grid(cells), 8))
        assert np.allclose(sums(a) + sums(b), sums(a + b), atol=1e-6)

    def test_edge_cells_absorb_remainder(self):
        cells = np.zeros((10, 10), dtype=np.int64)
        cells[9, 9] = 7  # falls in the last pooled cell when G=3 (regions 3,3,4)
        features = pool_heatmap(grid(cells), 3).reshape(3, 3)
        assert features[2, 2] == pytest.approx(np.log1p(7))
        assert features.sum() == pytest.approx(np.log1p(7))


def separable_dataset(rng, n_per_class=20, dim_grid=4):
    dim = dim_grid * dim_grid
    centers = np.zeros((3, dim))
    centers[0, 0] = 8.0
    centers[1, 5] = 8.0
    centers[2, 10] = 8.0
    rows, labels = [], []
    for cls in range(3):
        for _ in range(n_per_class):
            rows.append(centers[cls] + rng.normal(0, 0.3, dim))
            labels.append(cls)
    return np.array(rows), np.array(labels)


class TestTrain:
    def test_separable_clusters_reach_perfect_test_accuracy(self, rng):
        x, y = separable_dataset(rng)
        result = train(x, y, split_seed=1)
        assert result.accuracies["test"][0] == 1.0

    def test_loss_non_increasing(self, rng):
        x, y = separable_dataset(rng)
        result = train(x, y, split_seed=1)
        losses = result.loss_history
        assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))

    def test_shuffled_labels_hit_chance(self, rng):
        x, y = separable_dataset(rng, n_per_class=40)
        shuffled = y.copy()
        rng.shuffle(shuffled)
        result = train(x, shuffled, split_seed=3)
        accuracy, n_test = result.accuracies["test"]
        sigma = np.sqrt((1 / 3) * (2 / 3) / n_test)
        assert abs(accuracy - 1 / 3) <= 3 * sigma

    def test_deterministic(self, rng):
        x, y = separable_dataset(rng)
        a = train(x, y, split_seed=5)
        b = train(x, y, split_seed=5)
        assert np.array_equal(a.model.weights, b.model.weights)
        assert a.accuracies == b.accuracies

    def test_stratified_split_sizes(self, rng):
        x, y = separable_dataset(rng, n_per_class=10)
        result = train(x, y, split_seed=0)
        assert result.accuracies["train"][1] == 18
        assert result.accuracies["val"][1] == 6
        assert result.accuracies["test"][1] == 6

    def test_degenerate_data(self, rng):
        x, y = separable_dataset(rng, n_per_class=2)  # strata go empty
        with pytest.raises(DegenerateDataError):
            train(x, y)
        with pytest.raises(DegenerateDataError):
            train(np.zeros((12, 16)), [0] * 12)  # single class

    def test_too_few_samples(self):
        with pytest.raises(DegenerateDataError):
            train(np.zeros((6, 16)), [0, 1, 2, 0, 1, 2])


def zero_model(dim_grid=4, l2=1e-4):
    dim = dim_grid * dim_grid
    return SoftmaxModel(
        dim_grid,
        np.zeros((3, dim + 1)),
        np.zeros(dim),
        np.ones(dim),
        TrainConfig(l2=l2),
    )


class TestPredict:
    def test_zero_weight_model_is_uniform_with_label_zero(self):
        model = zero_model()
        label, probs = predict(model, np.zeros(16))
        assert label == ClassLabel.CUSTOMER
        assert np.allclose(probs, 1 / 3)
        assert abs(probs.sum() - 1.0) < 1e-9

    def test_logit_shift_invariance(self, rng):
        model = zero_model()
        weights = model.weights + rng.normal(0, 1, model.weights.shape)
        shifted = weights + 3.7  # same constant into every logit
        feature = rng.normal(0, 1, 16)
        a = predict_batch(
            SoftmaxModel(4, weights, model.feature_mean, model.feature_std, model.config),
            feature,
        )[1]
        b = predict_batch(
            SoftmaxModel(4, shifted, model.feature_mean, model.feature_std, model.config),
            feature,
        )[1]
        assert np.allclose(a, b, atol=1e-12)

    def test_matches_high_precision_softmax(self, rng):
        model = zero_model()
        weights = rng.normal(0, 2, model.weights.shape)
        model = SoftmaxModel(4, weights, model.feature_mean, model.feature_std, model.config)
        feature = rng.normal(0, 1, 16)
        _, probs = predict(model, feature)
        logits = np.hstack([1.0, feature]) @ weights.T
        with mpmath.workdps(60):
            exps = [mpmath.exp(mpmath.mpf(float(v))) for v in logits]
            total = sum(exps)
            expected = [float(e / total) for e in exps]
        assert np.allclose(probs, expected, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            predict(zero_model(), np.zeros(7))


class TestGradientCheck:
    def test_random_batch_small_error(self, rng):
        x, y = separable_dataset(rng, n_per_class=8)
        model = zero_model()
        model = SoftmaxModel(
            4, rng.normal(0, 0.1, (3, 17)), x.mean(axis=0), np.maximum(x.std(axis=0), 1e-8), TrainConfig()
        )
        assert gradient_check(model, x[:24], y[:24]) <= 1e-5

    def test_zero_weight_balanced_bias_gradient_near_zero(self):
        x = np.ones((6, 16))
        y = [0, 1, 2, 0, 1, 2]
        model = zero_model()
        from headtrack.classifier import _augment, _loss_and_gradient, _standardize

        x_aug = _augment(_standardize(x, model.feature_mean, model.feature_std))
        onehot = np.zeros((6, 3))
        onehot[np.arange(6), y] = 1.0
        _, gradient = _loss_and_gradient(model.weights, x_aug, onehot, model.config.l2)
        assert np.all(np.abs(gradient[:, 0]) < 1e-12)

    def test_doubling_l2_doubles_penalty_gradient(self, rng):
        x, y = separable_dataset(rng, n_per_class=5)
        weights = rng.normal(0, 0.5, (3, 17))
        from headtrack.classifier import _augment, _loss_and_gradient, _standardize

        x_aug = _augment(_standardize(x, x.mean(axis=0), np.maximum(x.std(axis=0), 1e-8)))
        onehot = np.zeros((len(y), 3))
        onehot[np.arange(len(y)), y] = 1.0
        _, g1 = _loss_and_gradient(weights, x_aug, onehot, 0.01)
        _, g2 = _loss_and_gradient(weights, x_aug, onehot, 0.02)
        penalty = weights.copy()
        penalty[:, 0] = 0.0
        assert np.allclose(g2 - g1, 0.01 * penalty, atol=1e-12)

    def test_batch_size_limit(self, rng):
        x, y = separable_dataset(rng, n_per_class=20)
        with pytest.raises(InvariantError):
            gradient_check(zero_model(), x, y)


class TestModelFile:
    def test_round_trip(self, rng, tmp_path):
        x, y = separable_dataset(rng)
        model = train(x, y, split_seed=2).model
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.grid_size == model.grid_size
        assert loaded.config == model.config
        assert np.allclose(loaded.weights, model.weights, rtol=1e-8)
        test_point = rng.normal(0, 1, 16)
        assert predict(loaded, test_point)[0] == predict(model, test_point)[0]

    def test_deterministic_bytes(self, rng, tmp_path):
        x, y = separable_dataset(rng)
        model = train(x, y, split_seed=2).model
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        save_model(model, a)
        save_model(model, b)
        assert a.read_bytes() == b.read_bytes()

    def test_features_round_trip(self, rng, tmp_path):
        ids = np.arange(1, 21)
        features = np.round(rng.normal(0, 3, (20, 16)), 6)
        path = tmp_path / "f.csv"
        save_features(ids, features, path)
        got_ids, got = load_features(path)
        assert np.array_equal(got_ids, ids)
        assert np.allclose(got, features, atol=1e-9)
