"""Regression trees with a vectorized split search, plus boosted and bagged
ensembles built on them."""

from __future__ import annotations

import numpy as np

from ..errors import InputError

_GAIN_EPS = 1e-12  # guards against fp noise presenting as a positive gain


def _best_split(X: np.ndarray, y: np.ndarray, cols: np.ndarray, min_leaf: int):
    """Best (gain, feature, threshold) over candidate columns, or None.

    Gain is the SSE reduction sum_L^2/n_L + sum_R^2/n_R - sum^2/n, computed
    for every cut position of every column at once via cumulative sums.
    Ties break to the lowest column index, then the lowest cut position.
    """
    m = X.shape[0]
    if m < 2 * min_leaf:
        return None
    sub = X[:, cols]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[order]
    cy = np.cumsum(ys, axis=0)
    total = cy[-1]

    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    sum_left = cy[:-1]
    sum_right = total[None, :] - sum_left
    gains = sum_left**2 / n_left + sum_right**2 / n_right - (total**2 / m)[None, :]

    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        pos = np.arange(1, m)
        valid &= ((pos >= min_leaf) & (m - pos >= min_leaf))[:, None]
    gains[~valid] = -np.inf

    flat = np.argmax(gains.T)  # column-major scan: first-best is lowest column
    col, cut = divmod(flat, m - 1)
    gain = gains[cut, col]
    if not gain > _GAIN_EPS:
        return None
    threshold = 0.5 * (xs[cut, col] + xs[cut + 1, col])
    return float(gain), int(cols[col]), float(threshold)


class DecisionTree:
    """CART-style regression tree; rows with x <= threshold go left.

    Stored flat: feature_[i] < 0 marks node i as a leaf holding value_[i].
    feature_gain_ accumulates the raw SSE reduction per feature.
    """

    def __init__(
        self,
        max_depth: int = 16,
        min_samples_leaf: int = 1,
        feature_fraction: float | None = None,
        seed: int = 0,
    ):
        if max_depth < 1:
            raise InputError("max_depth must be at least 1")
        if min_samples_leaf < 1:
            raise InputError("min_samples_leaf must be at least 1")
        if feature_fraction is not None and not 0.0 < feature_fraction <= 1.0:
            raise InputError("feature_fraction must lie in (0, 1]")
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.feature_fraction = feature_fraction
        self.seed = seed
        self.feature_: np.ndarray | None = None
        self.threshold_: np.ndarray | None = None
        self.left_: np.ndarray | None = None
        self.right_: np.ndarray | None = None
        self.value_: np.ndarray | None = None
        self.feature_gain_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise InputError(f"bad training shapes {X.shape} / {y.shape}")
        if X.shape[0] == 0:
            raise InputError("cannot fit a tree on zero rows")
        n_features = X.shape[1]
        rng = np.random.default_rng(self.seed)
        self.feature_gain_ = np.zeros(n_features)

        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []

        def new_node() -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            return len(feature) - 1

        root = new_node()
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            y_node = y[rows]
            value[node] = float(y_node.mean())
            if depth >= self.max_depth or len(rows) < 2 * self.min_samples_leaf:
                continue
            if self.feature_fraction is None:
                cols = np.arange(n_features)
            else:
                k = max(1, int(n_features * self.feature_fraction))
                cols = np.sort(rng.choice(n_features, size=k, replace=False))
            split = _best_split(X[rows], y_node, cols, self.min_samples_leaf)
            if split is None:
                continue
            gain, col, thr = split
            self.feature_gain_[col] += gain
            go_left = X[rows, col] <= thr
            feature[node] = col
            threshold[node] = thr
            left[node] = new_node()
            right[node] = new_node()
            stack.append((left[node], rows[go_left], depth + 1))
            stack.append((right[node], rows[~go_left], depth + 1))

        self.feature_ = np.asarray(feature, dtype=np.int64)
        self.threshold_ = np.asarray(threshold)
        self.left_ = np.asarray(left, dtype=np.int64)
        self.right_ = np.asarray(right, dtype=np.int64)
        self.value_ = np.asarray(value)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.feature_ is None:
            raise InputError("predict called before fit")
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        # advance all rows one level at a time until every index is a leaf
        active = self.feature_[idx] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            node = idx[rows]
            go_left = X[rows, self.feature_[node]] <= self.threshold_[node]
            idx[rows] = np.where(go_left, self.left_[node], self.right_[node])
            active[rows] = self.feature_[idx[rows]] >= 0
        return self.value_[idx]

    def to_dict(self) -> dict:
        def walk(i: int) -> dict:
            if self.feature_[i] < 0:
                return {"value": float(self.value_[i])}
            return {
                "feature": int(self.feature_[i]),
                "threshold": float(self.threshold_[i]),
                "left": walk(int(self.left_[i])),
                "right": walk(int(self.right_[i])),
            }

        if self.feature_ is None:
            raise InputError("cannot serialize an unfitted tree")
        return walk(0)

    @classmethod
    def from_dict(cls, data: dict, n_features: int) -> "DecisionTree":
        tree = cls()
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []

        def walk(node: dict) -> int:
            i = len(feature)
            if "value" in node and "feature" not in node:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(node["value"]))
                return i
            feature.append(int(node["feature"]))
            threshold.append(float(node["threshold"]))
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            left[i] = walk(node["left"])
            right[i] = walk(node["right"])
            return i

        walk(data)
        tree.feature_ = np.asarray(feature, dtype=np.int64)
        tree.threshold_ = np.asarray(threshold)
        tree.left_ = np.asarray(left, dtype=np.int64)
        tree.right_ = np.asarray(right, dtype=np.int64)
        tree.value_ = np.asarray(value)
        tree.feature_gain_ = np.zeros(n_features)
        return tree


def _normalized_importance(total_gain: np.ndarray) -> np.ndarray:
    s = total_gain.sum()
    return total_gain / s if s > 0 else np.zeros_like(total_gain)


class GradientBoosting:
    """Squared-error boosting: constant base prediction plus shrunken trees
    fit to residuals. Training loss is non-increasing for lr in (0, 2]."""

    def __init__(
        self,
        n_trees: int = 200,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        min_samples_leaf: int = 2,
        seed: int = 0,
    ):
        if n_trees < 1:
            raise InputError("n_trees must be at least 1")
        if learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        self.n_trees = n_trees
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.base_: float = 0.0
        self.trees_: list[DecisionTree] = []
        self.n_features_: int = 0
        self.train_losses_: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoosting":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self.n_features_ = X.shape[1]
        self.base_ = float(y.mean())
        self.trees_ = []
        self.train_losses_ = []
        pred = np.full(X.shape[0], self.base_)
        for i in range(self.n_trees):
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                seed=self.seed + i,
            )
            tree.fit(X, y - pred)
            self.trees_.append(tree)
            pred = pred + self.learning_rate * tree.predict(X)
            self.train_losses_.append(float(np.mean((y - pred) ** 2)))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        pred = np.full(X.shape[0], self.base_)
        for tree in self.trees_:
            pred += self.learning_rate * tree.predict(X)
        return pred

    def feature_importances(self) -> np.ndarray:
        total = np.zeros(self.n_features_)
        for tree in self.trees_:
            total += tree.feature_gain_
        return _normalized_importance(total)


class RandomForest:
    """Bagged trees: bootstrap rows per tree, random feature subset per node,
    plain mean aggregation."""

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 16,
        min_samples_leaf: int = 2,
        feature_fraction: float = 1.0 / 3.0,
        seed: int = 0,
    ):
        if n_trees < 1:
            raise InputError("n_trees must be at least 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.feature_fraction = feature_fraction
        self.seed = seed
        self.trees_: list[DecisionTree] = []
        self.n_features_: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self.n_features_ = X.shape[1]
        self.trees_ = []
        rng = np.random.default_rng(self.seed)
        for i in range(self.n_trees):
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                feature_fraction=self.feature_fraction,
                seed=self.seed + 1 + i,
            )
            tree.fit(X[rows], y[rows])
            self.trees_.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if not self.trees_:
            raise InputError("predict called before fit")
        out = np.zeros(X.shape[0])
        for tree in self.trees_:
            out += tree.predict(X)
        return out / len(self.trees_)

    def feature_importances(self) -> np.ndarray:
        total = np.zeros(self.n_features_)
        for tree in self.trees_:
            total += tree.feature_gain_
        return _normalized_importance(total)
