"""Comparison classifiers on the HOG features: brute-force KNN and a CART tree."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyNode, EmptyTrainingSet, InvalidConfig, KTooLarge


@dataclass(frozen=True)
class KnnParams:
    k: int = 3
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.metric != "euclidean":
            raise InvalidConfig(f"unsupported metric {self.metric!r}")


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 12
    min_leaf: int = 2

    def __post_init__(self):
        if self.max_depth < 0:
            raise InvalidConfig(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf < 1:
            raise InvalidConfig(f"min_leaf must be >= 1, got {self.min_leaf}")


def _as_matrix(features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimMismatch(f"expected a 2-D feature matrix, got shape {x.shape}")
    return x


def knn_predict(train_features, train_labels, x, p: KnnParams = KnnParams()) -> int:
    """Majority vote of the k nearest training points.

    Equal distances are ordered by training index; a tied vote goes to the
    label of the single nearest neighbour.
    """
    train = np.asarray(train_features, dtype=np.float64)
    labels = np.asarray(train_labels)
    if train.size == 0 or len(labels) == 0:
        raise EmptyTrainingSet("KNN needs at least one training point")
    train = _as_matrix(train)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (train.shape[1],):
        raise DimMismatch(f"query has shape {x.shape}, training vectors have length {train.shape[1]}")
    if p.k > len(train):
        raise KTooLarge(f"k={p.k} exceeds training set size {len(train)}")
    diff = train - x
    dist = np.einsum("ij,ij->i", diff, diff)
    nearest = np.argsort(dist, kind="stable")[: p.k]
    vote = int(np.sum(labels[nearest]))
    if vote == 0:
        return int(labels[nearest[0]])
    return 1 if vote > 0 else -1


@dataclass(frozen=True, eq=False)
class KnnModel:
    """A 'fitted' KNN is just its training set."""

    features: np.ndarray
    labels: np.ndarray
    params: KnnParams = KnnParams()

    @classmethod
    def fit(cls, features, labels, params: KnnParams = KnnParams()) -> "KnnModel":
        x = np.asarray(features, dtype=np.float64)
        if len(x) == 0:
            raise EmptyTrainingSet("KNN needs at least one training point")
        if params.k > len(x):
            raise KTooLarge(f"k={params.k} exceeds training set size {len(x)}")
        return cls(_as_matrix(x), np.asarray(labels, dtype=np.int64), params)

    def predict(self, xs) -> np.ndarray:
        return np.array([knn_predict(self.features, self.labels, x, self.params) for x in np.asarray(xs)])


def gini(counts) -> float:
    counts = [float(c) for c in counts]
    total = sum(counts)
    if total <= 0:
        raise EmptyNode("gini of an empty node")
    return 1.0 - sum((c / total) ** 2 for c in counts)


def _gini2(pos, n):
    # vectorised two-class gini; identical arithmetic to gini([pos, n - pos])
    p = pos / n
    q = (n - pos) / n
    return 1.0 - (p * p + q * q)


@dataclass(frozen=True)
class Node:
    label: int = 0  # leaves only
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True, eq=False)
class TreeModel:
    nodes: tuple[Node, ...]
    params: TreeParams = TreeParams()
    n_features: int = field(default=0)

    @property
    def depth(self) -> int:
        def walk(i):
            node = self.nodes[i]
            return 0 if node.is_leaf else 1 + max(walk(node.left), walk(node.right))

        return walk(0)

    def predict_one(self, x) -> int:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or len(x) != self.n_features:
            raise DimMismatch(f"tree expects {self.n_features} features, got shape {x.shape}")
        node = self.nodes[0]
        while not node.is_leaf:
            node = self.nodes[node.left if x[node.feature] <= node.threshold else node.right]
        return node.label

    def predict(self, xs) -> np.ndarray:
        return np.array([self.predict_one(x) for x in np.asarray(xs)])


def best_split(x: np.ndarray, y: np.ndarray, min_leaf: int = 1):
    """Exhaustive Gini search over all features and midpoints.

    Returns ``(gain, feature, threshold)`` or None when no admissible split
    exists. Ties prefer the lower feature index, then the lower threshold.
    """
    n, d = x.shape
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    pos_sorted = (y[order] > 0).astype(np.float64)
    left_pos = np.cumsum(pos_sorted, axis=0)[:-1]  # split after row k: rows 0..k go left
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    total_pos = float(np.sum(y > 0))
    parent = gini([total_pos, n - total_pos])
    weighted = (n_left * _gini2(left_pos, n_left) + n_right * _gini2(total_pos - left_pos, n_right)) / n
    gain = parent - weighted

    valid = xs[1:] > xs[:-1]
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    best = gain.max()
    # column-major scan so the first hit has the lowest feature, then lowest threshold
    k, f = np.argwhere((gain == best).T)[0][::-1]
    a, b = xs[k, f], xs[k + 1, f]
    t = (a + b) / 2.0
    if t >= b:  # adjacent floats
        t = a
    return float(best), int(f), float(t)


# gains below this are rounding noise, treated as zero
_MIN_GAIN = 1e-12


def tree_fit(features, labels, p: TreeParams = TreeParams()) -> TreeModel:
    x = _as_matrix(features)
    y = np.asarray(labels, dtype=np.int64)
    if len(x) != len(y):
        raise DimMismatch(f"{len(x)} feature vectors but {len(y)} labels")
    if len(x) == 0:
        raise EmptyTrainingSet("tree needs at least one training point")
    nodes: list[Node] = []

    def majority(idx):
        vote = int(np.sum(y[idx]))
        return 1 if vote >= 0 else -1

    def grow(idx, depth):
        me = len(nodes)
        nodes.append(Node())
        ys = y[idx]
        if depth >= p.max_depth or np.all(ys == ys[0]):
            nodes[me] = Node(label=majority(idx))
            return me
        split = best_split(x[idx], ys, p.min_leaf)
        if split is None or split[0] <= _MIN_GAIN:
            nodes[me] = Node(label=majority(idx))
            return me
        _, f, t = split
        go_left = x[idx, f] <= t
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        nodes[me] = Node(feature=f, threshold=t, left=left, right=right)
        return me

    grow(np.arange(len(x)), 0)
    return TreeModel(tuple(nodes), p, x.shape[1])


def tree_predict(m: TreeModel, x) -> int:
    return m.predict_one(x)
