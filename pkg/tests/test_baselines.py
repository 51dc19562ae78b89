"""The five comparison methods: values, symmetries, and the shared surface."""

import numpy as np
import pytest

from pgn4 import (
    DatasetTable,
    Rng,
    TrainConfig,
    evaluate,
    load_classifier,
    save_classifier,
    train_adaboost,
    train_decision_tree,
    train_linear_svm,
    train_mlp,
    train_random_forest,
)
from pgn4.baselines import build_mlp, hinge_objective
from pgn4.training import gradient_check


def separable_fixture():
    """The canonical 20-point fixture: feature 0 separates with margin 2."""
    rng = Rng(1000)
    x0 = np.concatenate([-1.0 - rng.uniform(10), 1.0 + rng.uniform(10)])
    x1 = rng.normal(20)
    labels = np.array([0] * 10 + [1] * 10)
    return DatasetTable(["sep", "noise"], np.column_stack([x0, x1]), labels)


def train_accuracy(clf, table):
    pred = clf.score(table.features) >= 0.5
    return (pred == (table.labels == 1)).mean()


class TestDecisionTree:
    def test_separable_1d_depth_one(self):
        t = DatasetTable(["x"], np.array([[-2.0], [-1.0], [1.0], [2.0]]),
                         np.array([0, 0, 1, 1]))
        clf = train_decision_tree(t, max_depth=4)
        assert train_accuracy(clf, t) == 1.0
        assert clf.root.left.is_leaf and clf.root.right.is_leaf  # depth 1 suffices

    def test_pure_root_single_leaf(self):
        t = DatasetTable(["x"], np.array([[1.0], [2.0], [3.0]]), np.array([1, 1, 1]))
        clf = train_decision_tree(t)
        assert clf.root.is_leaf
        assert clf.root.value == 1.0

    def test_xor_needs_depth_two(self):
        t = DatasetTable(
            ["a", "b"],
            np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
            np.array([0, 1, 1, 0]),
        )
        assert train_accuracy(train_decision_tree(t, max_depth=2), t) == 1.0

    def test_unlimited_depth_memorizes(self):
        rng = Rng(2001)
        t = DatasetTable(
            [f"f{i}" for i in range(3)],
            rng.normal(60).reshape(20, 3),
            (rng.uniform(20) > 0.5).astype(int),
        )
        clf = train_decision_tree(t, max_depth=50, min_leaf=1)
        assert train_accuracy(clf, t) == 1.0

    def test_min_leaf_respected(self):
        t = separable_fixture()
        clf = train_decision_tree(t, max_depth=10, min_leaf=5)

        def smallest(node, rows):
            if node.is_leaf:
                return rows.sum()
            mask = t.features[rows][:, node.feature] >= node.threshold
            idx = np.nonzero(rows)[0]
            left = np.zeros_like(rows)
            right = np.zeros_like(rows)
            left[idx[~mask]] = True
            right[idx[mask]] = True
            return min(smallest(node.left, left), smallest(node.right, right))

        assert smallest(clf.root, np.ones(20, dtype=bool)) >= 5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            train_decision_tree(
                DatasetTable(["x"], np.zeros((0, 1)), np.zeros(0, dtype=int)))


class TestRandomForest:
    def test_degenerate_forest_equals_tree(self):
        t = separable_fixture()
        tree = train_decision_tree(t, max_depth=6, min_leaf=1)
        forest = train_random_forest(
            t, Rng(5), n_trees=1, max_depth=6, min_leaf=1,
            bootstrap=False, feature_subsample=False)
        probe = Rng(6).normal(40).reshape(20, 2) * 2
        np.testing.assert_array_equal(tree.score(t.features), forest.score(t.features))
        np.testing.assert_array_equal(tree.score(probe), forest.score(probe))

    def test_separable_with_many_trees(self):
        t = separable_fixture()
        clf = train_random_forest(t, Rng(7), n_trees=25, max_depth=6)
        assert train_accuracy(clf, t) == 1.0

    def test_same_seed_identical(self):
        t = separable_fixture()
        a = train_random_forest(t, Rng(8), n_trees=10)
        b = train_random_forest(t, Rng(8), n_trees=10)
        probe = Rng(9).normal(20).reshape(10, 2)
        np.testing.assert_array_equal(a.score(probe), b.score(probe))

    def test_different_seed_differs(self):
        # noisy labels so bootstrap/subsampling actually shape the trees
        rng = Rng(2002)
        t = DatasetTable(
            [f"f{i}" for i in range(4)],
            rng.normal(200).reshape(50, 4),
            (rng.uniform(50) > 0.5).astype(int),
        )
        a = train_random_forest(t, Rng(8), n_trees=10)
        b = train_random_forest(t, Rng(9), n_trees=10)
        probe = Rng(10).normal(40).reshape(10, 4)
        assert not np.array_equal(a.score(probe), b.score(probe))


def naive_best_stump(X, ysign, w):
    """Brute-force oracle: loop all features, midpoints, and polarities."""
    best = None
    best_err = np.inf
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2.0
            raw = np.where(X[:, f] >= thr, 1.0, -1.0)
            for polarity in (1, -1):
                err = w[(raw * polarity) != ysign].sum()
                if err < best_err:
                    best_err = err
                    best = (f, thr, polarity)
    return best, best_err


def naive_adaboost_trace(X, y, rounds):
    """Textbook recurrence, kept independent of the implementation."""
    ysign = np.where(y == 1, 1.0, -1.0)
    w = np.full(len(y), 1.0 / len(y))
    out = []
    for _ in range(rounds):
        (f, thr, pol), err = naive_best_stump(X, ysign, w)
        alpha = 0.5 * np.log((1 - max(err, 1e-12)) / max(err, 1e-12))
        h = np.where(X[:, f] >= thr, 1.0, -1.0) * pol
        out.append((f, thr, pol, alpha, w.copy()))
        if err == 0:
            break
        w = w * np.exp(-alpha * ysign * h)
        w /= w.sum()
    return out


class TestAdaBoost:
    def test_separable_one_round(self):
        t = DatasetTable(["x"], np.array([[-2.0], [-1.0], [1.0], [2.0]]),
                         np.array([0, 0, 1, 1]))
        clf = train_adaboost(t, n_rounds=10)
        assert len(clf.stumps) == 1  # perfect stump stops the loop
        assert train_accuracy(clf, t) == 1.0

    def test_matches_naive_trace_first_rounds(self):
        rng = Rng(3001)
        X = rng.normal(30).reshape(15, 2)
        y = ((X[:, 0] + 0.8 * X[:, 1] + 0.3 * rng.normal(15)) > 0).astype(int)
        t = DatasetTable(["a", "b"], X, y)
        clf = train_adaboost(t, n_rounds=20)
        trace = naive_adaboost_trace(X, y, 3)
        for i, (f, thr, pol, alpha, _) in enumerate(trace):
            assert clf.stumps[i].feature == f
            assert clf.stumps[i].threshold == pytest.approx(thr)
            assert clf.stumps[i].polarity == pol
            assert clf.alphas[i] == pytest.approx(alpha, abs=1e-12)

    def test_retained_rounds_beat_half(self):
        rng = Rng(3002)
        X = rng.normal(40).reshape(20, 2)
        y = ((X[:, 0] + rng.normal(20)) > 0).astype(int)
        t = DatasetTable(["a", "b"], X, y)
        clf = train_adaboost(t, n_rounds=30)
        # replay the weight evolution and verify each retained stump's error
        ysign = np.where(y == 1, 1.0, -1.0)
        w = np.full(20, 1.0 / 20)
        for stump, alpha in zip(clf.stumps, clf.alphas):
            h = stump.signs(X)
            err = w[h != ysign].sum()
            assert err < 0.5
            w = w * np.exp(-alpha * ysign * h)
            w /= w.sum()

    def test_single_class_rejected(self):
        t = DatasetTable(["x"], np.array([[1.0], [2.0]]), np.array([1, 1]))
        with pytest.raises(ValueError):
            train_adaboost(t)


class TestLinearSvm:
    def test_separable_2d(self):
        t = separable_fixture()
        clf = train_linear_svm(t, Rng(11), lam=1e-3, epochs=20)
        assert train_accuracy(clf, t) == 1.0

    def test_objective_trace_non_increasing(self):
        t = separable_fixture()
        clf = train_linear_svm(t, Rng(12), lam=1e-2, epochs=15)
        trace = np.array(clf.objective_trace)
        assert (np.diff(trace) <= 1e-12).all()

    def test_label_flip_negates_weights(self):
        t = separable_fixture()
        flipped = DatasetTable(t.feature_names, t.features, 1 - t.labels)
        a = train_linear_svm(t, Rng(13), lam=1e-3, epochs=10)
        b = train_linear_svm(flipped, Rng(13), lam=1e-3, epochs=10)
        np.testing.assert_allclose(a.weights, -b.weights, atol=1e-12)

    def test_deterministic(self):
        t = separable_fixture()
        a = train_linear_svm(t, Rng(14))
        b = train_linear_svm(t, Rng(14))
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_hinge_objective_value(self):
        w = np.array([1.0, 0.0, 0.0])
        X = np.array([[2.0, 0.0, 1.0], [-0.5, 0.0, 1.0]])
        ysign = np.array([1.0, -1.0])
        # margins: 2 (hinge 0) and -0.5 -> y*m = 0.5 -> hinge 0.5
        expect = 0.5 * 0.01 * 1.0 + 0.25
        assert hinge_objective(w, X, ysign, 0.01) == pytest.approx(expect)


class TestMlp:
    def test_overfits_duplicated_samples(self):
        rng = Rng(4001)
        x = rng.normal(10)
        t = DatasetTable([f"f{i}" for i in range(10)], np.tile(x, (32, 1)),
                         np.ones(32, dtype=int))
        clf, history = train_mlp(t, t, TrainConfig(
            learning_rate=1e-2, epochs=200, batch_size=8, seed=1))
        assert history.epochs[-1].train_loss < 0.01

    def test_gradient_check_tight(self):
        rng = Rng(4002)
        model = build_mlp(6, rng, hidden=8)
        X = rng.normal(4 * 6).reshape(4, 6)
        y = np.array([1.0, 0.0, 1.0, 0.0])
        report = gradient_check(model, X, y, h=1e-5, tolerance=1e-6)
        assert report.passed, report.per_tensor

    def test_same_seed_identical_weights(self):
        t = separable_fixture()
        cfg = TrainConfig(epochs=3, seed=21)
        a, _ = train_mlp(t, t, cfg)
        b, _ = train_mlp(t, t, cfg)
        for name, arr in a.parameters().items():
            np.testing.assert_array_equal(arr, b.parameters()[name])


ALL_TRAINERS = {
    "dt": lambda t: train_decision_tree(t),
    "rf": lambda t: train_random_forest(t, Rng(31), n_trees=15),
    "ada": lambda t: train_adaboost(t, n_rounds=25),
    "svm": lambda t: train_linear_svm(t, Rng(32), epochs=25),
    "nn": lambda t: train_mlp(t, t, TrainConfig(
        learning_rate=1e-2, epochs=120, batch_size=10, seed=33))[0],
}


class TestSharedSurface:
    @pytest.mark.parametrize("method", sorted(ALL_TRAINERS))
    def test_separable_fixture_fully_learned(self, method):
        t = separable_fixture()
        clf = ALL_TRAINERS[method](t)
        assert clf.method_id == method
        assert train_accuracy(clf, t) == 1.0

    @pytest.mark.parametrize("method", sorted(ALL_TRAINERS))
    def test_scores_are_probabilities_and_evaluable(self, method):
        t = separable_fixture()
        clf = ALL_TRAINERS[method](t)
        scores = clf.score(t.features)
        assert (scores >= 0.0).all() and (scores <= 1.0).all()
        rep = evaluate(scores, t.labels)
        assert rep.roc_auc == 1.0

    @pytest.mark.parametrize("method", sorted(ALL_TRAINERS))
    def test_serialization_roundtrip(self, method, tmp_path):
        t = separable_fixture()
        clf = ALL_TRAINERS[method](t)
        path = tmp_path / f"{method}.pgn4"
        save_classifier(clf, path)
        loaded = load_classifier(path)
        assert loaded.method_id == method
        probe = Rng(34).normal(16).reshape(8, 2)
        np.testing.assert_array_equal(clf.score(probe), loaded.score(probe))
