"""From-scratch classifiers backing the model steps and the surrogate.

All learners operate on a dense float64 feature matrix and integer class
indices (class index = rank of the class token in lexicographic order), so
"smallest class index" tie-breaking equals "lexicographically smallest token".
Every learner is deterministic given its constructor arguments:

* decision tree: best gini split, ties broken by lowest feature index then
  lowest threshold; leaf votes break ties toward the smallest class index;
* random forest: bagging over seeded bootstrap draws, majority vote with
  smallest-index ties;
* k-nearest neighbours: distance ties broken by lowest training-row index,
  vote ties by smallest class index;
* logistic regression: one-vs-rest full-batch gradient descent with
  per-class seeded initialization, prediction ties to the smallest index.
"""

from __future__ import annotations

import numpy as np

from .seeds import derive_seed


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value=None, feature=None, threshold=None, left=None, right=None):
        self.value = value
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class DecisionTree:
    """CART-style classifier with gini impurity and axis-aligned splits."""

    def __init__(self, max_depth: int, min_leaf: int = 1):
        if max_depth < 1 or min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.root: _TreeNode | None = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "DecisionTree":
        self.n_classes = n_classes
        self.root = self._build(X, y, depth=0)
        return self

    def _leaf(self, y: np.ndarray) -> _TreeNode:
        counts = np.bincount(y, minlength=self.n_classes)
        return _TreeNode(value=int(counts.argmax()))

    def _build(self, X: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        n = len(y)
        if depth >= self.max_depth or n < 2 * self.min_leaf or len(np.unique(y)) == 1:
            return self._leaf(y)
        split = self._best_split(X, y)
        if split is None:
            return self._leaf(y)
        feature, threshold = split
        mask = X[:, feature] <= threshold
        nl = int(mask.sum())
        # Guard against float-degenerate midpoints collapsing one side.
        if nl < self.min_leaf or n - nl < self.min_leaf:
            return self._leaf(y)
        node = _TreeNode(feature=feature, threshold=threshold)
        node.left = self._build(X[mask], y[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], depth + 1)
        return node

    def _best_split(self, X: np.ndarray, y: np.ndarray) -> tuple[int, float] | None:
        n, n_features = X.shape
        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), y] = 1.0
        best: tuple[float, int, float] | None = None  # (impurity, feature, threshold)
        for j in range(n_features):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            cum = onehot[order].cumsum(axis=0)
            cut = np.flatnonzero(xs[:-1] < xs[1:])  # last index of each left block
            if cut.size == 0:
                continue
            nl = (cut + 1).astype(np.float64)
            nr = n - nl
            valid = (nl >= self.min_leaf) & (nr >= self.min_leaf)
            if not valid.any():
                continue
            cut = cut[valid]
            nl = nl[valid]
            nr = nr[valid]
            left = cum[cut]
            right = cum[-1] - left
            gini_l = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
            weighted = (nl * gini_l + nr * gini_r) / n
            k = int(weighted.argmin())  # first minimum -> lowest threshold
            if best is None or weighted[k] < best[0]:
                pos = cut[k]
                threshold = xs[pos] + (xs[pos + 1] - xs[pos]) / 2.0
                best = (float(weighted[k]), j, float(threshold))
        if best is None:
            return None
        return best[1], best[2]

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X), dtype=np.intp)
        for i, row in enumerate(X):
            node = self.root
            while node.value is None:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.value
        return out


class RandomForest:
    """Bagged ensemble of decision trees (bootstrap rows, all features)."""

    def __init__(self, n_trees: int, max_depth: int, seed: int):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.seed = seed
        self.trees: list[DecisionTree] = []
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "RandomForest":
        self.n_classes = n_classes
        rng = np.random.default_rng(self.seed)
        n = len(y)
        self.trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, n, size=n)
            self.trees.append(DecisionTree(self.max_depth, 1).fit(X[idx], y[idx], n_classes))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((len(X), self.n_classes))
        for tree in self.trees:
            votes[np.arange(len(X)), tree.predict(X)] += 1.0
        return votes.argmax(axis=1)


class KNearest:
    """k-nearest-neighbours by Euclidean distance; k is clamped to the
    training-set size."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self._X: np.ndarray | None = None
        self._y: np.ndarray | None = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "KNearest":
        self._X = X
        self._y = y
        self.n_classes = n_classes
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, len(self._y))
        out = np.empty(len(X), dtype=np.intp)
        for i, row in enumerate(X):
            d2 = ((self._X - row) ** 2).sum(axis=1)
            order = np.argsort(d2, kind="stable")  # stable -> lowest row index on ties
            counts = np.bincount(self._y[order[:k]], minlength=self.n_classes)
            out[i] = counts.argmax()
        return out


class LogisticOvR:
    """One-vs-rest logistic regression trained by full-batch gradient descent.

    The bias column is appended internally and excluded from L2 shrinkage.
    """

    def __init__(self, lr: float, epochs: int, l2: float, seed: int):
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.seed = seed
        self.weights: np.ndarray | None = None  # (n_features + 1, n_classes)

    @staticmethod
    def _sigmoid(z: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticOvR":
        n, f = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        W = np.empty((f + 1, n_classes))
        for c in range(n_classes):
            rng = np.random.default_rng(derive_seed(self.seed, f"class/{c}"))
            w = rng.normal(0.0, 0.01, size=f + 1)
            target = (y == c).astype(np.float64)
            for _ in range(self.epochs):
                p = self._sigmoid(Xb @ w)
                grad = Xb.T @ (p - target) / n
                grad[:-1] += self.l2 * w[:-1]
                w = w - self.lr * grad
            W[:, c] = w
        self.weights = W
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xb = np.hstack([X, np.ones((len(X), 1))])
        scores = Xb @ self.weights
        return scores.argmax(axis=1)  # first maximum -> smallest class index
