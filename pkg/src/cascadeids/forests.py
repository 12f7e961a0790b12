"""Probability-emitting Gini trees, cost-complexity pruning and forests."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from cascadeids import _treebuild
from cascadeids.core import Dataset, derive_seed, rng_for

SPLIT_MODES = {
    "exhaustive": _treebuild.MODE_EXHAUSTIVE,
    "random_subspace": _treebuild.MODE_SUBSPACE,
    "fully_random": _treebuild.MODE_FULLY_RANDOM,
}
FOREST_MODES = {"random": "random_subspace", "completely_random": "fully_random"}


class NotFittedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    ccp_alpha: float = 0.0
    split_mode: str = "exhaustive"
    features_per_split: int | None = None  # None: ceil(sqrt(d)) in random_subspace mode

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.ccp_alpha < 0:
            raise ValueError("ccp_alpha must be >= 0")
        if self.split_mode not in SPLIT_MODES:
            raise ValueError(f"unknown split_mode {self.split_mode!r}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


# published decision-tree baseline settings
BASELINE_TREE = TreeParams(max_depth=4, min_samples_split=10, ccp_alpha=0.01)


def _gini(counts: np.ndarray) -> np.ndarray:
    total = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / total[..., None]
    g = 1.0 - np.sum(p * p, axis=-1)
    return np.where(total > 0, g, 0.0)


class DecisionTree:
    """Array-backed binary tree; ``x[feature] < threshold`` goes left.

    ``counts`` keeps the training class counts of every node, so node
    impurities and leaf probabilities can always be recomputed.
    """

    def __init__(self, feature, threshold, left, right, counts, n_features: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.float64).reshape(-1, 2)
        self.n_features = int(n_features)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def impurity(self) -> np.ndarray:
        return _gini(self.counts)

    @property
    def n_samples(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max()) if self.n_nodes else 0

    def apply(self, X) -> np.ndarray:
        X = self._check(X)
        return _treebuild.apply(X, self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, X) -> np.ndarray:
        leaf_counts = self.counts[self.apply(X)]
        return leaf_counts / leaf_counts.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def structure(self) -> list[tuple]:
        """Preorder (feature, threshold, counts) listing, for structural comparison."""
        out = []
        stack = [0]
        while stack:
            node = stack.pop()
            out.append((int(self.feature[node]), float(self.threshold[node]), tuple(self.counts[node])))
            if self.feature[node] >= 0:
                stack.extend((int(self.right[node]), int(self.left[node])))
        return out

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> DecisionTree:
        return cls(data["feature"], data["threshold"], data["left"], data["right"], data["counts"], data["n_features"])


def _features_per_split(params: TreeParams, d: int) -> int:
    if params.features_per_split is not None:
        return max(1, min(d, int(params.features_per_split)))
    return max(1, math.ceil(math.sqrt(d)))


def _grow(X, y, sample_idx, params: TreeParams, seed: int) -> DecisionTree:
    d = X.shape[1]
    feature, threshold, left, right, counts, n_nodes = _treebuild.grow(
        X,
        y,
        np.ascontiguousarray(sample_idx, dtype=np.int64),
        SPLIT_MODES[params.split_mode],
        -1 if params.max_depth is None else params.max_depth,
        params.min_samples_split,
        _features_per_split(params, d),
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
    )
    tree = DecisionTree(
        feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], counts[:n_nodes], d
    )
    if params.ccp_alpha > 0:
        tree = ccp_prune(tree, params.ccp_alpha)
    return tree


def fit_tree(ds: Dataset, params: TreeParams = TreeParams(), seed: int = 0, sample_idx=None) -> DecisionTree:
    """Grow a Gini tree on ``ds`` (optionally on the row multiset ``sample_idx``)."""
    if ds.n_rows == 0:
        raise ValueError("cannot fit a tree on an empty dataset")
    X = np.ascontiguousarray(ds.features)
    y = np.ascontiguousarray(ds.labels)
    if sample_idx is None:
        sample_idx = np.arange(ds.n_rows)
    return _grow(X, y, sample_idx, params, seed)


# -- cost-complexity pruning -------------------------------------------------


def _subtree_stats(tree: DecisionTree, is_leaf: np.ndarray, risk: np.ndarray):
    """Risk of the current leaves below each node and their number."""
    n = tree.n_nodes
    sub_risk = np.zeros(n)
    n_leaves = np.zeros(n, dtype=np.int64)
    # children always have larger ids than their parent
    for node in range(n - 1, -1, -1):
        if is_leaf[node]:
            sub_risk[node] = risk[node]
            n_leaves[node] = 1
        else:
            l, r = tree.left[node], tree.right[node]
            sub_risk[node] = sub_risk[l] + sub_risk[r]
            n_leaves[node] = n_leaves[l] + n_leaves[r]
    return sub_risk, n_leaves


def node_risk(tree: DecisionTree) -> np.ndarray:
    """R(t): node impurity weighted by the fraction of root samples reaching it."""
    total = tree.counts[0].sum()
    return tree.impurity * tree.n_samples / total


def _reachable(tree: DecisionTree, is_leaf: np.ndarray) -> np.ndarray:
    alive = np.zeros(tree.n_nodes, dtype=bool)
    stack = [0]
    while stack:
        node = stack.pop()
        alive[node] = True
        if not is_leaf[node]:
            stack.extend((int(tree.left[node]), int(tree.right[node])))
    return alive


def _compact(tree: DecisionTree, is_leaf: np.ndarray) -> DecisionTree:
    order = []
    stack = [0]
    while stack:
        node = stack.pop()
        order.append(node)
        if not is_leaf[node]:
            stack.extend((int(tree.right[node]), int(tree.left[node])))
    # renumber in breadth-respecting preorder: children after parent
    new_id = {old: i for i, old in enumerate(order)}
    feature = np.array([tree.feature[o] if not is_leaf[o] else -1 for o in order], dtype=np.int64)
    threshold = np.array([tree.threshold[o] if not is_leaf[o] else 0.0 for o in order])
    left = np.array([new_id[int(tree.left[o])] if not is_leaf[o] else -1 for o in order], dtype=np.int64)
    right = np.array([new_id[int(tree.right[o])] if not is_leaf[o] else -1 for o in order], dtype=np.int64)
    counts = tree.counts[order]
    return DecisionTree(feature, threshold, left, right, counts, tree.n_features)


def ccp_prune(tree: DecisionTree, alpha: float) -> DecisionTree:
    """Minimal cost-complexity pruning by repeated weakest-link collapse.

    Each round collapses the internal node with the smallest
    g(t) = (R(t) - R(subtree_t)) / (leaves_t - 1), while g(t) <= alpha.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0 or tree.n_nodes == 1:
        return tree
    is_leaf = tree.feature < 0
    risk = node_risk(tree)
    while True:
        alive = _reachable(tree, is_leaf)
        internal = np.flatnonzero(alive & ~is_leaf)
        if internal.size == 0:
            break
        sub_risk, n_leaves = _subtree_stats(tree, is_leaf, risk)
        g = (risk[internal] - sub_risk[internal]) / (n_leaves[internal] - 1)
        weakest = int(np.argmin(g))
        if g[weakest] > alpha:
            break
        is_leaf = is_leaf.copy()
        is_leaf[internal[weakest]] = True
    return _compact(tree, is_leaf)


# -- forests -----------------------------------------------------------------


class Forest:
    """Bagged trees whose prediction is the mean of member probability vectors."""

    def __init__(self, trees: list[DecisionTree], mode: str, feature_names=None):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = list(trees)
        self.mode = mode
        self.feature_names = None if feature_names is None else tuple(feature_names)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        total = np.zeros((X.shape[0], 2))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / self.n_trees

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "feature_names": None if self.feature_names is None else list(self.feature_names),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Forest:
        return cls([DecisionTree.from_dict(t) for t in data["trees"]], data["mode"], data.get("feature_names"))


def forest_fit(
    ds: Dataset,
    mode: str = "random",
    n_trees: int = 100,
    params: TreeParams | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> Forest:
    """Fit a random (``random``) or completely-random (``completely_random``) forest.

    Tree ``t`` draws its bootstrap and split randomness from
    ``derive_seed(seed, t)``, so results do not depend on ``n_jobs``.
    """
    if mode not in FOREST_MODES:
        raise ValueError(f"unknown forest mode {mode!r}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if ds.n_rows == 0:
        raise ValueError("cannot fit a forest on an empty dataset")
    base = params or TreeParams()
    params = TreeParams(
        max_depth=base.max_depth,
        min_samples_split=base.min_samples_split,
        ccp_alpha=base.ccp_alpha,
        split_mode=FOREST_MODES[mode],
        features_per_split=base.features_per_split,
    )
    X = np.ascontiguousarray(ds.features)
    y = np.ascontiguousarray(ds.labels)
    n = ds.n_rows

    def build(t: int) -> DecisionTree:
        tseed = derive_seed(seed, t)
        rows = np.random.default_rng(tseed).integers(0, n, size=n) if bootstrap else np.arange(n)
        return _grow(X, y, rows, params, tseed)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(n_trees)))
    else:
        trees = [build(t) for t in range(n_trees)]
    return Forest(trees, mode, ds.feature_names)


def forest_predict_proba(forest: Forest, row) -> np.ndarray:
    return forest.predict_proba(np.asarray(row, dtype=np.float64).reshape(1, -1))[0]


# -- importances -------------------------------------------------------------


def impurity_importance(model) -> dict[str, float]:
    """Total weighted Gini decrease per feature, normalised to sum to 1."""
    trees = model.trees if isinstance(model, Forest) else [model] if isinstance(model, DecisionTree) else None
    if not trees:
        raise NotFittedError("impurity_importance needs a fitted Forest or DecisionTree")
    d = trees[0].n_features
    names = getattr(model, "feature_names", None) or tuple(f"f{j}" for j in range(d))
    total = np.zeros(d)
    for tree in trees:
        weighted = tree.impurity * tree.n_samples
        for node in np.flatnonzero(tree.feature >= 0):
            l, r = tree.left[node], tree.right[node]
            total[tree.feature[node]] += weighted[node] - weighted[l] - weighted[r]
    s = total.sum()
    if s > 0:
        total = total / s
    return {name: float(v) for name, v in zip(names, total)}


def accuracy_of(model, X, y) -> float:
    proba = model.predict_proba(X)
    return float(np.mean((proba[:, 1] > 0.5).astype(np.int64) == y))


def permutation_importance(model, ds: Dataset, seed: int = 0, n_repeats: int = 5) -> dict[str, float]:
    """Mean accuracy drop on ``ds`` after shuffling each column independently."""
    if model is None or not hasattr(model, "predict_proba"):
        raise NotFittedError("permutation_importance needs a fitted model with predict_proba")
    X = np.array(ds.features)
    baseline = accuracy_of(model, X, ds.labels)
    out = {}
    for j, name in enumerate(ds.feature_names):
        rng = rng_for(seed, j)
        drops = []
        for _ in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = rng.permutation(Xp[:, j])
            drops.append(baseline - accuracy_of(model, Xp, ds.labels))
        out[name] = float(np.mean(drops))
    return out
