"""Classical baselines: decision tree, random forest, AdaBoost, linear SVM, MLP.

Every trainer returns an object with a ``method_id`` and a
``score(X) -> probabilities in [0, 1]`` method, the same surface the
convolutional model exposes, so the evaluation protocol and the sweep
treat all six methods identically.  All training is deterministic given
the seed carried by the supplied ``Rng``.

Scores are probability-like by construction: leaf positive fractions for
trees and forests, and the logistic of the signed margin for the boosted
and linear-margin models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import container
from .data import DatasetTable
from .layers import Activation, Dense, sigmoid
from .model import SequentialNet, build_pgn4, load_model, save_model, Pgn4Model
from .rng import Rng
from .training import TrainConfig, TrainHistory, train


# ---------------------------------------------------------------------------
# decision tree (CART, Gini impurity)
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (positive fraction)."""

    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"v": self.value}
        return {
            "v": self.value,
            "f": self.feature,
            "t": self.threshold,
            "l": self.left.to_dict(),
            "r": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "f" not in d:
            return cls(value=d["v"])
        return cls(
            value=d["v"],
            feature=d["f"],
            threshold=d["t"],
            left=cls.from_dict(d["l"]),
            right=cls.from_dict(d["r"]),
        )


def _best_split(X, y, idx, feature_ids, min_leaf):
    """Exhaustive Gini search over value midpoints; None if nothing splits.

    Candidate thresholds are midpoints between distinct consecutive sorted
    values.  Strictly better cost wins; exact ties keep the lowest feature
    index, then the lowest threshold (features and thresholds are scanned
    ascending).
    """
    n = idx.size
    best_cost = np.inf
    best = None
    for f in feature_ids:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[idx][order]
        cut = np.nonzero(sv[:-1] < sv[1:])[0]
        if cut.size == 0:
            continue
        left_n = cut + 1.0
        right_n = n - left_n
        keep = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not keep.any():
            continue
        cum_pos = np.cumsum(sy)
        left_pos = cum_pos[cut]
        right_pos = cum_pos[-1] - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        cost = (left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)) / n
        cost[~keep] = np.inf
        i = int(np.argmin(cost))  # first minimum = lowest threshold
        if cost[i] < best_cost:
            best_cost = cost[i]
            j = cut[i]
            best = (f, (sv[j] + sv[j + 1]) / 2.0)
    return best


def _grow(X, y, idx, depth, max_depth, min_leaf, rng=None, m_try=None):
    node = TreeNode(value=float(y[idx].mean()))
    if depth >= max_depth or idx.size < 2 * min_leaf or node.value in (0.0, 1.0):
        return node
    if m_try is not None:
        feature_ids = np.sort(rng.partial_permutation(X.shape[1], m_try))
    else:
        feature_ids = np.arange(X.shape[1])
    split = _best_split(X, y, idx, feature_ids, min_leaf)
    if split is None:
        return node
    f, thr = split
    node.feature, node.threshold = int(f), float(thr)
    go_right = X[idx, f] >= thr
    node.left = _grow(X, y, idx[~go_right], depth + 1, max_depth, min_leaf, rng, m_try)
    node.right = _grow(X, y, idx[go_right], depth + 1, max_depth, min_leaf, rng, m_try)
    return node


def _tree_scores(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])

    def walk(node, rows):
        if rows.size == 0:
            return
        if node.is_leaf:
            out[rows] = node.value
            return
        go_right = X[rows, node.feature] >= node.threshold
        walk(node.left, rows[~go_right])
        walk(node.right, rows[go_right])

    walk(root, np.arange(X.shape[0]))
    return out


@dataclass
class DecisionTreeModel:
    root: TreeNode
    max_depth: int
    min_leaf: int
    method_id: str = "dt"

    def score(self, X: np.ndarray) -> np.ndarray:
        return _tree_scores(self.root, np.asarray(X, dtype=np.float64))


def train_decision_tree(
    train_table: DatasetTable, max_depth: int = 6, min_leaf: int = 1
) -> DecisionTreeModel:
    """Grow a CART tree; leaves score the positive fraction they saw."""
    if train_table.n_rows == 0:
        raise ValueError("empty training set")
    if max_depth < 0 or min_leaf < 1:
        raise ValueError("need max_depth >= 0 and min_leaf >= 1")
    X = train_table.features
    y = train_table.labels.astype(np.float64)
    root = _grow(X, y, np.arange(X.shape[0]), 0, max_depth, min_leaf)
    return DecisionTreeModel(root=root, max_depth=max_depth, min_leaf=min_leaf)


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    max_depth: int
    min_leaf: int
    bootstrap: bool
    feature_subsample: bool
    method_id: str = "rf"

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        total = np.zeros(X.shape[0])
        for root in self.trees:
            total += _tree_scores(root, X)
        return total / len(self.trees)


def train_random_forest(
    train_table: DatasetTable,
    rng: Rng,
    n_trees: int = 100,
    max_depth: int = 6,
    min_leaf: int = 1,
    bootstrap: bool = True,
    feature_subsample: bool = True,
) -> RandomForestModel:
    """Bag CART trees; tree i draws from the child stream rng.child(i).

    With ``n_trees=1, bootstrap=False, feature_subsample=False`` the forest
    degenerates to exactly the plain decision tree.  Per-split subsampling
    uses ceil(sqrt(F)) features.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if train_table.n_rows == 0:
        raise ValueError("empty training set")
    X = train_table.features
    y = train_table.labels.astype(np.float64)
    n, F = X.shape
    m_try = int(np.ceil(np.sqrt(F))) if feature_subsample else None
    trees = []
    for i in range(n_trees):
        tree_rng = rng.child(i)
        idx = tree_rng.integers(n, n) if bootstrap else np.arange(n)
        trees.append(_grow(X, y, np.asarray(idx), 0, max_depth, min_leaf, tree_rng, m_try))
    return RandomForestModel(
        trees=trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        bootstrap=bootstrap,
        feature_subsample=feature_subsample,
    )


# ---------------------------------------------------------------------------
# AdaBoost on depth-1 stumps
# ---------------------------------------------------------------------------


@dataclass
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1: predict positive when x >= threshold; -1: the reverse

    def signs(self, X: np.ndarray) -> np.ndarray:
        raw = np.where(X[:, self.feature] >= self.threshold, 1.0, -1.0)
        return raw * self.polarity


@dataclass
class AdaBoostModel:
    stumps: list[Stump]
    alphas: list[float]
    method_id: str = "ada"

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        total = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            total += alpha * stump.signs(X)
        return total

    def score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin(X))


def _best_stump(X, ysign, w, orders):
    """Weighted-error-optimal stump via cumulative sums over cached sorts.

    Ties resolve to the lowest feature index, lowest threshold, and
    polarity +1 before -1, in that priority order.
    """
    best_err = np.inf
    best = None
    w_pos_tot = w[ysign > 0].sum()
    w_neg_tot = w[ysign < 0].sum()
    for f in range(X.shape[1]):
        order = orders[f]
        sv = X[order, f]
        sw = w[order]
        spos = ysign[order] > 0
        cut = np.nonzero(sv[:-1] < sv[1:])[0]
        if cut.size == 0:
            continue
        cum_pos = np.cumsum(sw * spos)[cut]
        cum_neg = np.cumsum(sw * ~spos)[cut]
        # polarity +1 predicts -1 below the threshold and +1 at or above it:
        # the errors are the positives below plus the negatives at or above
        err_plus = cum_pos + (w_neg_tot - cum_neg)
        err_minus = (w_pos_tot + w_neg_tot) - err_plus
        errs = np.column_stack([err_plus, err_minus]).reshape(-1)
        i = int(np.argmin(errs))
        if errs[i] < best_err:
            best_err = errs[i]
            j = cut[i // 2]
            polarity = 1 if i % 2 == 0 else -1
            best = Stump(feature=f, threshold=float((sv[j] + sv[j + 1]) / 2.0), polarity=polarity)
    return best, best_err


def train_adaboost(train_table: DatasetTable, n_rounds: int = 100) -> AdaBoostModel:
    """Discrete AdaBoost with the standard exponential reweighting.

    Stops early when no stump beats weighted error 0.5 (nothing left to
    learn) or when a stump is perfect (error 0, included with the error
    clamped at 1e-12 so its vote stays finite).
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    y = train_table.labels
    if y.sum() in (0, len(y)):
        raise ValueError("AdaBoost needs both classes in the training data")
    X = train_table.features
    ysign = np.where(y == 1, 1.0, -1.0)
    n = X.shape[0]
    orders = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    alphas: list[float] = []
    for _ in range(n_rounds):
        stump, err = _best_stump(X, ysign, w, orders)
        if stump is None or err >= 0.5:
            break
        clamped = max(err, 1e-12)
        alpha = 0.5 * np.log((1.0 - clamped) / clamped)
        stumps.append(stump)
        alphas.append(float(alpha))
        if err == 0.0:
            break
        w = w * np.exp(-alpha * ysign * stump.signs(X))
        w /= w.sum()
    return AdaBoostModel(stumps=stumps, alphas=alphas)


# ---------------------------------------------------------------------------
# linear SVM via stochastic subgradient descent (Pegasos step 1/(lambda t))
# ---------------------------------------------------------------------------


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (F + 1,), last entry is the bias weight
    lam: float
    objective_trace: list[float]
    method_id: str = "svm"

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.weights[:-1] + self.weights[-1]

    def score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin(X))


def hinge_objective(weights: np.ndarray, X: np.ndarray, ysign: np.ndarray, lam: float) -> float:
    """Regularized hinge loss lam/2 ||w||^2 + mean max(0, 1 - y m(x))."""
    margins = X @ weights
    hinge = np.maximum(0.0, 1.0 - ysign * margins)
    return float(0.5 * lam * weights @ weights + hinge.mean())


def train_linear_svm(
    train_table: DatasetTable,
    rng: Rng,
    lam: float = 1e-3,
    epochs: int = 20,
) -> LinearSvmModel:
    """Seeded stochastic subgradient descent on the hinge objective.

    A constant 1 is appended to the features so the bias rides along in
    the weight vector (and is regularized with it; at lam this small that
    is immaterial).  The returned model is the average of all iterates,
    whose objective is also recorded per epoch in ``objective_trace``.
    Inputs are expected standardized; raw scales make the fixed Pegasos
    step schedule erratic.
    """
    y = train_table.labels
    if y.sum() in (0, len(y)):
        raise ValueError("SVM needs both classes in the training data")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    Xa = np.hstack([train_table.features, np.ones((train_table.n_rows, 1))])
    ysign = np.where(y == 1, 1.0, -1.0)
    n, d = Xa.shape
    w = np.zeros(d)
    w_sum = np.zeros(d)
    t = 0
    trace = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            scale = 1.0 - 1.0 / t
            if ysign[i] * (w @ Xa[i]) < 1.0:
                w = scale * w + (1.0 / (lam * t)) * ysign[i] * Xa[i]
            else:
                w = scale * w
            w_sum += w
        trace.append(hinge_objective(w_sum / t, Xa, ysign, lam))
    return LinearSvmModel(weights=w_sum / t, lam=lam, objective_trace=trace)


# ---------------------------------------------------------------------------
# plain neural network (the non-convolutional contrast)
# ---------------------------------------------------------------------------


class MlpModel(SequentialNet):
    """One 128-unit ReLU hidden layer and a sigmoid head."""

    method_id = "nn"

    def __init__(self, n_features: int, hidden: int = 128, activation: str = "relu"):
        self.hidden = hidden
        self.activation = activation
        layers = [
            Dense(n_features, hidden, name="dense1"),
            Activation(activation, name="act1"),
            Dense(hidden, 1, name="head"),
        ]
        super().__init__(layers, n_features=n_features)


def build_mlp(n_features: int, rng: Rng | None, hidden: int = 128,
              activation: str = "relu") -> MlpModel:
    model = MlpModel(n_features, hidden=hidden, activation=activation)
    for layer in model.layers:
        layer.init_params(rng)
    return model


def train_mlp(
    train_table: DatasetTable,
    valid_table: DatasetTable,
    config: TrainConfig,
    hidden: int = 128,
) -> tuple[MlpModel, TrainHistory]:
    """Initialize (seed-derived) and run the shared Adam/BCE loop."""
    model = build_mlp(train_table.n_features, Rng(config.seed).child(1), hidden=hidden)
    history = train(model, train_table, valid_table, config)
    return model, history


# ---------------------------------------------------------------------------
# serialization: every method in the one container format
# ---------------------------------------------------------------------------


def save_classifier(clf, path: str | Path, extra_meta: dict | None = None) -> None:
    """Serialize any trained method to the shared container format."""
    extra = extra_meta or {}
    if isinstance(clf, Pgn4Model):
        save_model(clf, path, extra_meta=extra)
        return
    if isinstance(clf, DecisionTreeModel):
        meta = {"max_depth": clf.max_depth, "min_leaf": clf.min_leaf, "tree": clf.root.to_dict()}
        arrays: dict[str, np.ndarray] = {}
    elif isinstance(clf, RandomForestModel):
        meta = {
            "max_depth": clf.max_depth,
            "min_leaf": clf.min_leaf,
            "bootstrap": clf.bootstrap,
            "feature_subsample": clf.feature_subsample,
            "trees": [t.to_dict() for t in clf.trees],
        }
        arrays = {}
    elif isinstance(clf, AdaBoostModel):
        meta = {
            "stumps": [
                {"f": s.feature, "t": s.threshold, "p": s.polarity, "a": a}
                for s, a in zip(clf.stumps, clf.alphas)
            ]
        }
        arrays = {}
    elif isinstance(clf, LinearSvmModel):
        meta = {"lam": clf.lam, "objective_trace": clf.objective_trace}
        arrays = {"weights": clf.weights}
    elif isinstance(clf, MlpModel):
        meta = {"n_features": clf.n_features, "hidden": clf.hidden, "activation": clf.activation}
        arrays = dict(clf.parameters())
    else:
        raise TypeError(f"don't know how to serialize {type(clf).__name__}")
    meta.update(extra)
    container.save_container(path, clf.method_id, meta, arrays)


def load_classifier(path: str | Path):
    method, meta, arrays = container.load_container(path)
    if method == "pgn4":
        return load_model(path)
    if method == "dt":
        return DecisionTreeModel(
            root=TreeNode.from_dict(meta["tree"]),
            max_depth=meta["max_depth"],
            min_leaf=meta["min_leaf"],
        )
    if method == "rf":
        return RandomForestModel(
            trees=[TreeNode.from_dict(t) for t in meta["trees"]],
            max_depth=meta["max_depth"],
            min_leaf=meta["min_leaf"],
            bootstrap=meta["bootstrap"],
            feature_subsample=meta["feature_subsample"],
        )
    if method == "ada":
        return AdaBoostModel(
            stumps=[Stump(feature=s["f"], threshold=s["t"], polarity=s["p"]) for s in meta["stumps"]],
            alphas=[s["a"] for s in meta["stumps"]],
        )
    if method == "svm":
        return LinearSvmModel(
            weights=arrays["weights"],
            lam=meta["lam"],
            objective_trace=list(meta["objective_trace"]),
        )
    if method == "nn":
        model = MlpModel(meta["n_features"], hidden=meta["hidden"], activation=meta["activation"])
        model.set_parameters(arrays)
        return model
    raise container.ContainerError(f"{path}: unknown method id {method!r}")
