"""Shapley attributions under the interventional (marginal) value function.

The coalition value of a feature subset S for a query row x is

    v(S) = (1/B) * sum_b f(compose(x, b, S))

where compose takes x's values on S and background row b's values
elsewhere. Two engines compute the same quantity:

  * exact_shapley - enumerates all 2^p coalitions; valid for any
    predictor; guarded at p <= 15.
  * tree_shap - per-background-row path decomposition over tree
    ensembles; exact, so it must agree with the enumeration engine to
    float precision rather than approximately.

Attributions plus the base value (mean model output over the background)
always sum to the model's prediction for the explained row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linear import LinearModel, predict_linear
from .svr import SvrModel, predict_svr
from .trees import BoostedModel, ForestModel, TreeNode, predict_ensemble

EXACT_MAX_FEATURES = 15
EFFICIENCY_TOL = 1e-9


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows whose values stand in for absent features."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("background must be a nonempty 2-d array")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_training(cls, X, cap: int = 100, seed: int = 0) -> "BackgroundSet":
        """Full training set, uniformly subsampled (seeded) above `cap` rows."""
        X = np.asarray(X, dtype=float)
        if cap is not None and X.shape[0] > cap:
            rng = np.random.default_rng(seed)
            idx = np.sort(rng.choice(X.shape[0], size=cap, replace=False))
            X = X[idx]
        return cls(X)


@dataclass(frozen=True)
class ShapMatrix:
    base_value: float
    phi: np.ndarray  # (rows, features)
    predictions: np.ndarray  # model output per explained row

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        pred = np.asarray(self.predictions, dtype=float)
        gap = np.abs(self.base_value + phi.sum(axis=1) - pred)
        if gap.size and gap.max() > EFFICIENCY_TOL:
            raise ValueError(f"efficiency violated by {gap.max():.3g}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "predictions", pred)

    @property
    def n_rows(self) -> int:
        return self.phi.shape[0]

    @property
    def n_features(self) -> int:
        return self.phi.shape[1]


def _coalition_weights(p: int) -> np.ndarray:
    """w[s] = s! (p-s-1)! / p! for coalition size s."""
    fact = [math.factorial(k) for k in range(p + 1)]
    return np.array([fact[s] * fact[p - s - 1] / fact[p] for s in range(p)])


def exact_shapley(predict, x, background: BackgroundSet) -> np.ndarray:
    """Brute-force Shapley values by full coalition enumeration."""
    x = np.asarray(x, dtype=float).ravel()
    p = x.shape[0]
    if p > EXACT_MAX_FEATURES:
        raise ValueError(f"exact enumeration capped at {EXACT_MAX_FEATURES} "
                         f"features, got {p}")
    if background.n_features != p:
        raise ValueError("background feature count mismatch")
    B = background.size
    w = _coalition_weights(p)

    v = np.empty(1 << p)
    members = [np.nonzero([(mask >> j) & 1 for j in range(p)])[0]
               for mask in range(1 << p)]
    for mask in range(1 << p):
        composed = np.array(background.rows)
        composed[:, members[mask]] = x[members[mask]]
        v[mask] = float(np.mean(predict(composed)))

    phi = np.zeros(p)
    for mask in range(1 << p):
        s = len(members[mask])
        for i in range(p):
            if not (mask >> i) & 1:
                phi[i] += w[s] * (v[mask | (1 << i)] - v[mask])
    return phi


# --- interventional tree traversal ------------------------------------------

@lru_cache(maxsize=None)
def _uv_tables(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form coalition sums for a path forcing u features to the query
    row and v features to the background row.

    pos[u][v] weights a leaf's value in phi_i for i forced to the query side,
    neg[u][v] for i forced to the background side; both sum the Shapley
    kernel over every coalition consistent with the path.
    """
    w = _coalition_weights(p)
    pos = np.zeros((p + 1, p + 1))
    neg = np.zeros((p + 1, p + 1))
    for u in range(p + 1):
        for v in range(p + 1 - u):
            free = p - u - v
            for k in range(free + 1):
                c = math.comb(free, k)
                if u >= 1:
                    pos[u][v] += c * w[u - 1 + k]
                if u + k < p:
                    neg[u][v] += c * w[u + k]
    return pos, neg


def _tree_phi(root: TreeNode, x: np.ndarray, background: np.ndarray,
              phi: np.ndarray, scale: float):
    """Accumulate one tree's attributions for query row x over all background
    rows, batched by shared divergence pattern."""
    p = x.shape[0]
    B = background.shape[0]
    pos, neg = _uv_tables(p)

    def recurse(node: TreeNode, rows: np.ndarray, u_feats: list, v_feats: list):
        if node.is_leaf:
            if u_feats or v_feats:
                weight = scale * node.value * len(rows) / B
                u, v = len(u_feats), len(v_feats)
                for i in u_feats:
                    phi[i] += weight * pos[u][v]
                for i in v_feats:
                    phi[i] -= weight * neg[u][v]
            return
        f, thr = node.feature, node.threshold
        x_left = x[f] <= thr
        z_left = background[rows, f] <= thr
        same = rows[z_left == x_left]
        diff = rows[z_left != x_left]
        x_child, z_child = (node.left, node.right) if x_left else (node.right, node.left)
        if same.size:
            recurse(x_child, same, u_feats, v_feats)
        if diff.size:
            if f in u_feats:
                recurse(x_child, diff, u_feats, v_feats)
            elif f in v_feats:
                recurse(z_child, diff, u_feats, v_feats)
            else:
                recurse(x_child, diff, u_feats + [f], v_feats)
                recurse(z_child, diff, u_feats, v_feats + [f])

    recurse(root, np.arange(B), [], [])


def tree_shap(model, x, background: BackgroundSet) -> np.ndarray:
    """Exact interventional Shapley values for a tree, forest, or boosted
    ensemble; per-tree attributions combine linearly."""
    x = np.asarray(x, dtype=float).ravel()
    p = x.shape[0]
    if background.n_features != p:
        raise ValueError("background feature count mismatch")
    phi = np.zeros(p)
    if isinstance(model, TreeNode):
        _tree_phi(model, x, background.rows, phi, 1.0)
    elif isinstance(model, ForestModel):
        for tree in model.trees:
            _tree_phi(tree, x, background.rows, phi, 1.0 / len(model.trees))
    elif isinstance(model, BoostedModel):
        for tree in model.trees:
            _tree_phi(tree, x, background.rows, phi, model.learning_rate)
    else:
        raise TypeError(f"not a tree model: {type(model).__name__}")
    return phi


def is_tree_model(model) -> bool:
    return isinstance(model, (TreeNode, ForestModel, BoostedModel))


def resolve_predictor(model):
    """Model object (or bare callable) -> row-matrix prediction function."""
    if is_tree_model(model):
        return lambda X: predict_ensemble(model, X)
    if isinstance(model, LinearModel):
        return lambda X: predict_linear(model, X)
    if isinstance(model, SvrModel):
        return lambda X: predict_svr(model, X)
    if callable(model):
        return model
    raise TypeError(f"cannot explain model of type {type(model).__name__}")


def explain_matrix(model, rows, background: BackgroundSet) -> ShapMatrix:
    """Per-row attributions: tree models use the traversal engine, everything
    else the exact enumeration engine."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("rows must be a nonempty 2-d array")
    predict = resolve_predictor(model)
    base = float(np.mean(predict(np.array(background.rows))))
    if is_tree_model(model):
        phi = np.stack([tree_shap(model, r, background) for r in rows])
    else:
        phi = np.stack([exact_shapley(predict, r, background) for r in rows])
    return ShapMatrix(base, phi, predict(rows))


def global_importance(m: ShapMatrix, feature_names=None) -> list[tuple[str, float]]:
    """Mean |phi| per feature, ranked descending; ties keep declaration order."""
    if m.n_rows == 0:
        raise ValueError("empty matrix")
    names = (tuple(feature_names) if feature_names is not None
             else tuple(f"x{j}" for j in range(m.n_features)))
    if len(names) != m.n_features:
        raise ValueError("feature name count mismatch")
    imp = np.abs(m.phi).mean(axis=0)
    order = sorted(range(len(names)), key=lambda j: (-imp[j], j))
    return [(names[j], float(imp[j])) for j in order]


def shap_csv_lines(m: ShapMatrix, X, feature_names) -> list[str]:
    """Rows of the export table: row_index,feature,feature_value,shap_value,
    preceded by a base-value header record."""
    X = np.asarray(X, dtype=float)
    names = tuple(feature_names)
    lines = [f"# base_value={float(m.base_value)!r}",
             "row_index,feature,feature_value,shap_value"]
    for r in range(m.n_rows):
        for j, name in enumerate(names):
            lines.append(f"{r},{name},{float(X[r, j])!r},{float(m.phi[r, j])!r}")
    return lines
