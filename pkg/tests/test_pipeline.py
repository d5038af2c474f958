import numpy as np
import pytest

from headgest.nn import CellType, Model, ModelConfig, forward, init_weights, loss_sparse_ce
from headgest.pipeline import (
    EvalReport,
    GridResult,
    KFoldResult,
    TrainConfig,
    evaluate,
    grid_search,
    kfold_cv,
    stratified_folds,
    stratified_holdout,
    train,
    train_with_holdout,
)
from headgest.preprocess import flatten_block


def toy_data(n_per_class, seed=0, noise=0.05):
    """Linearly separable constant-signal classes; no padding plateau."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for cls, (p, s) in enumerate([(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0)]):
        for _ in range(n_per_class):
            block = np.tile([p, s], (240, 1)) + rng.normal(0, noise, (240, 2))
            xs.append(flatten_block(block).values)
            ys.append(cls)
    return np.asarray(xs), np.asarray(ys, dtype=np.int64)


GRU4 = ModelConfig(cell=CellType.GRU, hidden=4, seed=1)


class TestTrain:
    def test_history_length_equals_epochs(self):
        x, y = toy_data(4)
        tcfg = TrainConfig(epochs=3, batch_size=8, validation_frac=0.0, seed=0)
        _, history = train(GRU4, tcfg, x, y)
        assert len(history) == 3
        assert [h["epoch"] for h in history] == [1, 2, 3]

    def test_single_example_loss_strictly_decreases(self):
        x, y = toy_data(1, seed=3)
        x1, y1 = x[:1], y[:1]
        w0 = init_weights(GRU4)
        before = loss_sparse_ce(forward(GRU4, w0, x1), y1)
        tcfg = TrainConfig(epochs=1, batch_size=1, validation_frac=0.0, seed=0, shuffle=False)
        model, _ = train(GRU4, tcfg, x1, y1)
        after = loss_sparse_ce(forward(GRU4, model.weights, x1), y1)
        assert after < before

    def test_same_seeds_identical_weights(self):
        x, y = toy_data(6, seed=5)
        tcfg = TrainConfig(epochs=2, batch_size=8, validation_frac=0.0, seed=11)
        m1, h1 = train(GRU4, tcfg, x, y)
        m2, h2 = train(GRU4, tcfg, x, y)
        for (_, a), (_, b) in zip(m1.weights.tensors(), m2.weights.tensors()):
            assert np.array_equal(a, b)
        assert h1 == h2

    def test_empty_training_set_rejected(self):
        tcfg = TrainConfig(epochs=1, seed=0)
        with pytest.raises(ValueError):
            train(GRU4, tcfg, np.zeros((0, 480)), np.zeros(0, dtype=int))

    def test_validation_metrics_recorded(self):
        x, y = toy_data(6, seed=2)
        tcfg = TrainConfig(epochs=2, batch_size=8, seed=0)
        _, history = train(GRU4, tcfg, x[:12], y[:12], x[12:], y[12:])
        assert all(h["val_loss"] is not None for h in history)
        assert all(0.0 <= h["val_acc"] <= 1.0 for h in history)

    def test_holdout_split_is_stratified(self):
        x, y = toy_data(10, seed=1)
        x_tr, y_tr, x_val, y_val = stratified_holdout(x, y, 0.2, seed=4)
        assert len(y_val) == 6
        assert [int((y_val == c).sum()) for c in range(3)] == [2, 2, 2]
        assert len(y_tr) + len(y_val) == len(y)


class TestEvaluate:
    def test_constant_predictor_on_matching_data(self):
        # force "other" predictions via a huge dense bias on class 2
        w = init_weights(GRU4)
        w.b_dense[:] = [0.0, 0.0, 50.0]
        model = Model(config=GRU4, weights=w)
        x, y = toy_data(4, seed=0)
        other_mask = y == 2
        report = evaluate(model, x[other_mask], y[other_mask])
        assert report.accuracy == 1.0
        assert report.confusion[2, 2] == int(other_mask.sum())
        assert report.confusion.sum() == int(other_mask.sum())

    def test_trace_over_total_equals_accuracy(self, rng):
        w = init_weights(GRU4)
        model = Model(config=GRU4, weights=w)
        x, y = toy_data(5, seed=9)
        report = evaluate(model, x, y)
        assert report.accuracy == pytest.approx(
            np.trace(report.confusion) / report.confusion.sum()
        )
        assert report.confusion.sum() == len(y)
        assert (report.confusion >= 0).all()

    def test_row_sums_are_per_class_counts(self):
        w = init_weights(GRU4)
        model = Model(config=GRU4, weights=w)
        x, y = toy_data(7, seed=4)
        report = evaluate(model, x, y)
        assert report.confusion.sum(axis=1).tolist() == [7, 7, 7]

    def test_published_confusion_shape_consistency(self):
        # the published 3x3 confusion table's row sums must equal the
        # published per-class test counts it was computed from
        published = np.array([[4908, 587, 25], [0, 5618, 275], [0, 672, 6890]])
        assert published.sum(axis=1).tolist() == [5520, 5893, 7562]
        assert published.sum() == 18975

    def test_empty_rejected(self):
        model = Model(config=GRU4, weights=init_weights(GRU4))
        with pytest.raises(ValueError):
            evaluate(model, np.zeros((0, 480)), np.zeros(0, dtype=int))


class TestKFold:
    def test_each_example_in_exactly_one_fold(self):
        y = np.array([0] * 11 + [1] * 7 + [2] * 5)
        folds = stratified_folds(y, 4, seed=0)
        seen = np.concatenate(folds)
        assert sorted(seen.tolist()) == list(range(len(y)))

    def test_fold_sizes_differ_by_at_most_one_per_class(self):
        y = np.array([0] * 11 + [1] * 7 + [2] * 5)
        folds = stratified_folds(y, 4, seed=3)
        for cls, total in ((0, 11), (1, 7), (2, 5)):
            per_fold = [int((y[f] == cls).sum()) for f in folds]
            assert sum(per_fold) == total
            assert max(per_fold) - min(per_fold) <= 1

    def test_separable_toy_reaches_full_accuracy(self):
        x, y = toy_data(20, seed=0)
        tcfg = TrainConfig(epochs=20, batch_size=16, validation_frac=0.0, seed=1)
        result = kfold_cv(GRU4, x, y, 2, tcfg)
        assert result.fold_accuracies == [1.0, 1.0]
        assert result.mean_accuracy == 1.0

    def test_k_below_two_rejected(self):
        x, y = toy_data(3)
        with pytest.raises(ValueError):
            kfold_cv(GRU4, x, y, 1, TrainConfig(epochs=1, seed=0))

    def test_deterministic(self):
        x, y = toy_data(5, seed=8)
        tcfg = TrainConfig(epochs=2, batch_size=8, validation_frac=0.0, seed=2)
        a = kfold_cv(GRU4, x, y, 3, tcfg)
        b = kfold_cv(GRU4, x, y, 3, tcfg)
        assert a.fold_accuracies == b.fold_accuracies


class TestGridSearch:
    def test_single_config_grid(self):
        x, y = toy_data(4, seed=0)
        tcfg = TrainConfig(epochs=1, batch_size=8, validation_frac=0.0, seed=0)
        results = grid_search([CellType.GRU], [4], x, y, tcfg, k=2)
        assert len(results) == 1
        assert results[0].cell is CellType.GRU
        assert results[0].hidden == 4

    def test_all_cells_ranked_and_sorted(self):
        x, y = toy_data(4, seed=1)
        tcfg = TrainConfig(epochs=1, batch_size=8, validation_frac=0.0, seed=0)
        results = grid_search([CellType.GRU, CellType.LSTM], [2, 4], x, y, tcfg, k=2)
        assert len(results) == 4
        accs = [r.mean_accuracy for r in results]
        assert accs == sorted(accs, reverse=True)

    def test_tie_break_prefers_fewer_params(self):
        rows = [
            GridResult(cell=CellType.LSTM, hidden=8, params=1000, mean_accuracy=0.9),
            GridResult(cell=CellType.GRU, hidden=8, params=700, mean_accuracy=0.9),
        ]
        ranked = sorted(rows, key=lambda r: (-r.mean_accuracy, r.params))
        assert ranked[0].params == 700

    def test_empty_grid_rejected(self):
        x, y = toy_data(3)
        with pytest.raises(ValueError):
            grid_search([], [4], x, y, TrainConfig(seed=0), k=2)


class TestTrainWithHoldout:
    def test_holdout_metrics_present(self):
        x, y = toy_data(10, seed=6)
        tcfg = TrainConfig(epochs=2, batch_size=8, validation_frac=0.1, seed=0)
        _, history = train_with_holdout(GRU4, tcfg, x, y)
        assert history[-1]["val_acc"] is not None

    def test_zero_frac_trains_on_everything(self):
        x, y = toy_data(4, seed=6)
        tcfg = TrainConfig(epochs=1, batch_size=8, validation_frac=0.0, seed=0)
        _, history = train_with_holdout(GRU4, tcfg, x, y)
        assert history[-1]["val_acc"] is None
