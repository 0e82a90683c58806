"""Regression trees, bagged forests, and second-order gradient boosting.

One split kernel serves both families. Boosting mode scores a split by

    gain = 0.5 * (GL^2/(HL + lam) + GR^2/(HR + lam) - G^2/(H + lam))

with leaf weight -G/(H + lam); plain mode is the same kernel run on
g = -y, h = 1, lam = 0, which makes the gain variance reduction (up to
the constant 1/2) and the leaf the sample mean. Thresholds sit at the
midpoint of adjacent sorted values; ties go to the lowest feature index,
then the lowest threshold, so refits are bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeNode:
    """Split node (feature >= 0) or leaf (feature == -1, value set)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0
    cover: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_depth: int = 6
    max_features: int | None = None  # None: use all columns
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class BoostParams:
    learning_rate: float = 0.1
    n_estimators: int = 100
    max_depth: int = 3
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    reg_lambda: float = 1.0
    min_split_gain: float = 0.0
    base_score: float | None = None  # None: mean of y
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        if not 0.0 < self.colsample_bytree <= 1.0:
            raise ValueError("colsample_bytree must be in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")
        if self.min_split_gain < 0:
            raise ValueError("min_split_gain must be >= 0")


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    params: ForestParams
    n_features: int


@dataclass(frozen=True)
class BoostedModel:
    base_score: float
    learning_rate: float
    trees: tuple[TreeNode, ...]
    params: BoostParams = field(repr=False, default=None)
    n_features: int = 0


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    # independent per-tree stream: building order never affects the result
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _best_split(X, g, h, feature_ids, reg_lambda, min_samples_leaf):
    """Exact greedy search over midpoints; returns (feature, threshold, gain)."""
    best_gain = -math.inf
    best = None
    G = g.sum()
    H = h.sum()
    parent_score = G * G / (H + reg_lambda)
    n = len(g)
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        if xs[0] == xs[-1]:
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        counts = np.arange(1, n)
        valid = xs[1:] != xs[:-1]
        if min_samples_leaf > 1:
            valid &= (counts >= min_samples_leaf) & (n - counts >= min_samples_leaf)
        if not valid.any():
            continue
        gains = 0.5 * (gl * gl / (hl + reg_lambda)
                       + (G - gl) ** 2 / (H - hl + reg_lambda)
                       - parent_score)
        gains[~valid] = -math.inf
        k = int(np.argmax(gains))  # first max = lowest threshold
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best = (f, float((xs[k] + xs[k + 1]) / 2.0))
    if best is None:
        return None
    return best[0], best[1], best_gain


def _grow(X, g, h, depth, max_depth, reg_lambda, min_split_gain,
          min_samples_leaf, max_features, rng):
    G = g.sum()
    H = h.sum()
    node = TreeNode(value=float(-G / (H + reg_lambda)), cover=float(H))
    if depth >= max_depth or len(g) < 2 * min_samples_leaf or len(g) < 2:
        return node
    p = X.shape[1]
    if max_features is not None and max_features < p:
        feats = np.sort(rng.choice(p, size=max_features, replace=False))
    else:
        feats = np.arange(p)
    found = _best_split(X, g, h, feats, reg_lambda, min_samples_leaf)
    # relative epsilon keeps float noise on constant targets from splitting
    gain_floor = min_split_gain + 1e-12 * (1.0 + abs(G * G / (H + reg_lambda)))
    if found is None or found[2] <= gain_floor:
        return node
    f, thr, _ = found
    mask = X[:, f] <= thr
    node.feature = f
    node.threshold = thr
    node.left = _grow(X[mask], g[mask], h[mask], depth + 1, max_depth,
                      reg_lambda, min_split_gain, min_samples_leaf,
                      max_features, rng)
    node.right = _grow(X[~mask], g[~mask], h[~mask], depth + 1, max_depth,
                       reg_lambda, min_split_gain, min_samples_leaf,
                       max_features, rng)
    return node


def fit_regression_tree(X, y=None, gradients=None, hessians=None, *,
                        max_depth=6, min_samples_leaf=1, reg_lambda=0.0,
                        min_split_gain=0.0, max_features=None,
                        rng=None) -> TreeNode:
    """Grow one tree. Pass y for plain mode (mean leaves, variance gain) or
    gradients/hessians for boosting mode (leaf weight -G/(H+lam))."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a nonempty 2-d array")
    if y is not None:
        g = -np.asarray(y, dtype=float)
        h = np.ones(len(g))
        reg_lambda = 0.0
    else:
        if gradients is None:
            raise ValueError("provide y or gradients")
        g = np.asarray(gradients, dtype=float)
        h = (np.ones(len(g)) if hessians is None
             else np.asarray(hessians, dtype=float))
    if len(g) != X.shape[0]:
        raise ValueError("row count mismatch")
    if rng is None:
        rng = np.random.default_rng(0)
    return _grow(X, g, h, 0, max_depth, reg_lambda, min_split_gain,
                 min_samples_leaf, max_features, rng)


def predict_tree(node: TreeNode, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        cur = node
        while not cur.is_leaf:
            cur = cur.left if row[cur.feature] <= cur.threshold else cur.right
        out[i] = cur.value
    return out


def fit_random_forest(X, y, params: ForestParams) -> ForestModel:
    """Bagged plain trees: size-n bootstrap per tree, features sampled per split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if params.max_features is not None and params.max_features > p:
        raise ValueError(f"max_features {params.max_features} > {p} columns")
    trees = []
    for t in range(params.n_estimators):
        rng = _tree_rng(params.seed, t)
        idx = rng.integers(0, n, size=n)
        trees.append(fit_regression_tree(
            X[idx], y[idx], max_depth=params.max_depth,
            min_samples_leaf=params.min_samples_leaf,
            max_features=params.max_features, rng=rng))
    return ForestModel(tuple(trees), params, p)


def fit_gradient_boosting(X, y, params: BoostParams) -> BoostedModel:
    """Squared-loss boosting: g = yhat - y, h = 1, sequential rounds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    base = float(y.mean()) if params.base_score is None else float(params.base_score)
    yhat = np.full(n, base)
    trees = []
    for t in range(params.n_estimators):
        rng = _tree_rng(params.seed, t)
        rows = np.arange(n)
        if params.subsample < 1.0:
            k = max(1, int(round(params.subsample * n)))
            rows = np.sort(rng.choice(n, size=k, replace=False))
        cols = None
        if params.colsample_bytree < 1.0:
            k = max(1, int(round(params.colsample_bytree * p)))
            cols = np.sort(rng.choice(p, size=k, replace=False))
        g = yhat[rows] - y[rows]
        Xs = X[rows]
        tree = fit_regression_tree(
            Xs, gradients=g, max_depth=params.max_depth,
            reg_lambda=params.reg_lambda, min_split_gain=params.min_split_gain,
            max_features=None, rng=rng) if cols is None else _fit_on_columns(
            Xs, g, cols, params, rng)
        trees.append(tree)
        yhat += params.learning_rate * predict_tree(tree, X)
    return BoostedModel(base, params.learning_rate, tuple(trees), params, p)


def _fit_on_columns(X, g, cols, params: BoostParams, rng) -> TreeNode:
    """Column-subsampled round: fit on the slice, then restore global indices."""
    tree = fit_regression_tree(
        X[:, cols], gradients=g, max_depth=params.max_depth,
        reg_lambda=params.reg_lambda, min_split_gain=params.min_split_gain,
        rng=rng)
    _remap_features(tree, cols)
    return tree


def _remap_features(node: TreeNode, cols):
    if node.is_leaf:
        return
    node.feature = int(cols[node.feature])
    _remap_features(node.left, cols)
    _remap_features(node.right, cols)


def predict_ensemble(model, X) -> np.ndarray:
    """Dispatch over TreeNode / ForestModel / BoostedModel."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    if isinstance(model, TreeNode):
        return predict_tree(model, X)
    if isinstance(model, ForestModel):
        _check_columns(model.n_features, X)
        if X.shape[0] == 0:
            return np.empty(0)
        per_tree = np.stack([predict_tree(t, X) for t in model.trees])
        return per_tree.mean(axis=0)
    if isinstance(model, BoostedModel):
        _check_columns(model.n_features, X)
        out = np.full(X.shape[0], model.base_score)
        for tree in model.trees:
            out += model.learning_rate * predict_tree(tree, X)
        return out
    raise TypeError(f"not an ensemble model: {type(model).__name__}")


def _check_columns(expected: int, X):
    if expected and X.shape[1] != expected:
        raise ValueError(f"expected {expected} feature columns, got {X.shape[1]}")


# --- JSON serialization: flat node arrays per tree --------------------------

def tree_to_arrays(root: TreeNode) -> dict:
    """Flatten to parallel node arrays (children of node i follow it in order)."""
    feature, threshold, left, right, value, cover = [], [], [], [], [], []

    def visit(node: TreeNode) -> int:
        i = len(feature)
        feature.append(int(node.feature))
        threshold.append(float(node.threshold))
        left.append(-1)
        right.append(-1)
        value.append(float(node.value))
        cover.append(float(node.cover))
        if not node.is_leaf:
            left[i] = visit(node.left)
            right[i] = visit(node.right)
        return i

    visit(root)
    return {"feature": feature, "threshold": threshold,
            "children_left": left, "children_right": right,
            "value": value, "cover": cover}


def tree_from_arrays(doc: dict) -> TreeNode:
    def build(i: int) -> TreeNode:
        node = TreeNode(feature=doc["feature"][i],
                        threshold=doc["threshold"][i],
                        value=doc["value"][i],
                        cover=doc["cover"][i])
        if node.feature >= 0:
            node.left = build(doc["children_left"][i])
            node.right = build(doc["children_right"][i])
        return node

    return build(0)


def model_to_json(model) -> str:
    if isinstance(model, TreeNode):
        doc = {"kind": "tree", "tree": tree_to_arrays(model)}
    elif isinstance(model, ForestModel):
        doc = {"kind": "forest", "n_features": model.n_features,
               "trees": [tree_to_arrays(t) for t in model.trees]}
    elif isinstance(model, BoostedModel):
        doc = {"kind": "boosted", "n_features": model.n_features,
               "base_score": model.base_score,
               "learning_rate": model.learning_rate,
               "trees": [tree_to_arrays(t) for t in model.trees]}
    else:
        raise TypeError(f"not an ensemble model: {type(model).__name__}")
    return json.dumps(doc)


def model_from_json(text: str):
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "tree":
        return tree_from_arrays(doc["tree"])
    if kind == "forest":
        trees = tuple(tree_from_arrays(t) for t in doc["trees"])
        return ForestModel(trees, ForestParams(n_estimators=len(trees)),
                           doc.get("n_features", 0))
    if kind == "boosted":
        trees = tuple(tree_from_arrays(t) for t in doc["trees"])
        return BoostedModel(doc["base_score"], doc["learning_rate"], trees,
                            None, doc.get("n_features", 0))
    raise ValueError(f"unknown model document kind {kind!r}")
