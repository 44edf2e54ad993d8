"""Regressor backends for the heat generator.

Both are implemented here rather than wrapped from a library so that a
trained model serializes to plain JSON (no pickled objects in workspace
artifacts) and reloads to bit-identical predictions.  They follow the
scikit-learn estimator protocol and compose with its tooling.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import ValidationError


class RegressionTree:
    """CART regression tree: exact greedy squared-error splits, stored as arrays."""

    def __init__(self, max_depth: int = 3, min_samples_leaf: int = 1, min_samples_split: int = 2):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RegressionTree":
        self._feature: list[int] = []
        self._threshold: list[float] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._value: list[float] = []
        self._build(X, y, np.arange(len(y)), depth=0)
        self.feature_ = np.array(self._feature, dtype=np.int64)
        self.threshold_ = np.array(self._threshold, dtype=np.float64)
        self.left_ = np.array(self._left, dtype=np.int64)
        self.right_ = np.array(self._right, dtype=np.int64)
        self.value_ = np.array(self._value, dtype=np.float64)
        del self._feature, self._threshold, self._left, self._right, self._value
        return self

    def _new_node(self, value: float) -> int:
        node = len(self._feature)
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(node)
        self._right.append(node)
        self._value.append(value)
        return node

    def _build(self, X: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int) -> int:
        sub = y[idx]
        node = self._new_node(float(sub.mean()))
        if depth >= self.max_depth or len(idx) < self.min_samples_split or sub.min() == sub.max():
            return node
        split = self._best_split(X, sub, idx)
        if split is None:
            return node
        j, thr = split
        mask = X[idx, j] <= thr
        self._feature[node] = j
        self._threshold[node] = thr
        self._left[node] = self._build(X, y, idx[mask], depth + 1)
        self._right[node] = self._build(X, y, idx[~mask], depth + 1)
        return node

    def _best_split(self, X: np.ndarray, sub: np.ndarray, idx: np.ndarray) -> tuple[int, float] | None:
        n = len(idx)
        total1 = sub.sum()
        total2 = (sub * sub).sum()
        leaf = self.min_samples_leaf
        best_sse = math.inf
        best: tuple[int, float] | None = None
        k = np.arange(1, n, dtype=np.float64)
        for j in range(X.shape[1]):
            xs = X[idx, j]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            if xs[0] == xs[-1]:
                continue
            ys = sub[order]
            c1 = np.cumsum(ys)[:-1]
            c2 = np.cumsum(ys * ys)[:-1]
            valid = (xs[1:] != xs[:-1]) & (k >= leaf) & ((n - k) >= leaf)
            if not valid.any():
                continue
            sse = (c2 - c1 * c1 / k) + ((total2 - c2) - (total1 - c1) ** 2 / (n - k))
            sse[~valid] = math.inf
            m = int(np.argmin(sse))
            if sse[m] < best_sse:
                thr = xs[m] + (xs[m + 1] - xs[m]) / 2.0
                if not xs[m] <= thr < xs[m + 1]:
                    thr = float(xs[m])
                best_sse = float(sse[m])
                best = (j, float(thr))
        return best

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature_[node]
            rows = np.nonzero(f >= 0)[0]
            if rows.size == 0:
                break
            cur = node[rows]
            go_left = X[rows, f[rows]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
        return self.value_[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        tree = cls()
        tree.feature_ = np.array(d["feature"], dtype=np.int64)
        tree.threshold_ = np.array(d["threshold"], dtype=np.float64)
        tree.left_ = np.array(d["left"], dtype=np.int64)
        tree.right_ = np.array(d["right"], dtype=np.int64)
        tree.value_ = np.array(d["value"], dtype=np.float64)
        return tree


class GradientBoostedTreesRegressor(BaseEstimator, RegressorMixin):
    """Squared-error gradient boosting over regression trees.

    Exact greedy splits and no subsampling, so fitting is deterministic
    for a given input regardless of any seed.
    """

    def __init__(
        self,
        n_estimators: int = 200,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        min_samples_leaf: int = 1,
        min_samples_split: int = 2,
    ):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTreesRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ValidationError("fit needs a non-empty 2-D X aligned with y")
        self.init_ = float(y.mean())
        self.trees_: list[RegressionTree] = []
        current = np.full(len(y), self.init_)
        for _ in range(self.n_estimators):
            residual = y - current
            tree = RegressionTree(self.max_depth, self.min_samples_leaf, self.min_samples_split)
            tree.fit(X, residual)
            step = tree.predict(X)
            current = current + self.learning_rate * step
            self.trees_.append(tree)
            if np.abs(residual).max() < 1e-12:
                break
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            out = out + self.learning_rate * tree.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "gbrt",
            "params": self.get_params(),
            "init": self.init_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GradientBoostedTreesRegressor":
        est = cls(**d["params"])
        est.init_ = float(d["init"])
        est.trees_ = [RegressionTree.from_dict(t) for t in d["trees"]]
        return est


class TwoLayerPerceptronRegressor(BaseEstimator, RegressorMixin):
    """Small two-hidden-layer ReLU network trained full-batch with Adam.

    Alternative heat-generator backend for deployments that prefer a
    neural tabular learner; inputs are expected standardized.
    """

    def __init__(
        self,
        hidden: tuple[int, int] = (64, 32),
        epochs: int = 400,
        learning_rate: float = 0.01,
        seed: int = 7,
    ):
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray) -> "TwoLayerPerceptronRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ValidationError("fit needs a non-empty 2-D X aligned with y")
        rng = np.random.default_rng(self.seed)
        sizes = [X.shape[1], *self.hidden, 1]
        self.weights_ = [
            rng.normal(0.0, math.sqrt(2.0 / sizes[i]), size=(sizes[i], sizes[i + 1]))
            for i in range(3)
        ]
        self.biases_ = [np.zeros(sizes[i + 1]) for i in range(3)]
        m = [np.zeros_like(w) for w in self.weights_] + [np.zeros_like(b) for b in self.biases_]
        v = [np.zeros_like(w) for w in self.weights_] + [np.zeros_like(b) for b in self.biases_]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        n = len(y)
        for t in range(1, self.epochs + 1):
            h1 = np.maximum(X @ self.weights_[0] + self.biases_[0], 0.0)
            h2 = np.maximum(h1 @ self.weights_[1] + self.biases_[1], 0.0)
            out = h2 @ self.weights_[2] + self.biases_[2]
            delta = 2.0 * (out - y) / n
            g_w2 = h2.T @ delta
            g_b2 = delta.sum(axis=0)
            d2 = (delta @ self.weights_[2].T) * (h2 > 0)
            g_w1 = h1.T @ d2
            g_b1 = d2.sum(axis=0)
            d1 = (d2 @ self.weights_[1].T) * (h1 > 0)
            g_w0 = X.T @ d1
            g_b0 = d1.sum(axis=0)
            grads = [g_w0, g_w1, g_w2, g_b0, g_b1, g_b2]
            params = self.weights_ + self.biases_
            for i, (p, g) in enumerate(zip(params, grads)):
                m[i] = beta1 * m[i] + (1 - beta1) * g
                v[i] = beta2 * v[i] + (1 - beta2) * g * g
                m_hat = m[i] / (1 - beta1**t)
                v_hat = v[i] / (1 - beta2**t)
                p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        h1 = np.maximum(X @ self.weights_[0] + self.biases_[0], 0.0)
        h2 = np.maximum(h1 @ self.weights_[1] + self.biases_[1], 0.0)
        return (h2 @ self.weights_[2] + self.biases_[2]).ravel()

    def to_dict(self) -> dict:
        params = self.get_params()
        params["hidden"] = list(params["hidden"])
        return {
            "kind": "mlp",
            "params": params,
            "weights": [w.tolist() for w in self.weights_],
            "biases": [b.tolist() for b in self.biases_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwoLayerPerceptronRegressor":
        params = dict(d["params"])
        params["hidden"] = tuple(params["hidden"])
        est = cls(**params)
        est.weights_ = [np.array(w, dtype=np.float64) for w in d["weights"]]
        est.biases_ = [np.array(b, dtype=np.float64) for b in d["biases"]]
        return est


def regressor_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "gbrt":
        return GradientBoostedTreesRegressor.from_dict(d)
    if kind == "mlp":
        return TwoLayerPerceptronRegressor.from_dict(d)
    raise ValidationError(f"unknown regressor kind {kind!r}")
