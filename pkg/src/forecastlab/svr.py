"""Epsilon-insensitive support vector regression via pairwise SMO.

The dual is solved in the doubled variable z = [alpha; alpha*] with signs
s = [+1...; -1...], minimizing

    0.5 z'Qz + p'z,   Q = [[K, -K], [-K, K]],  p = [eps - y; eps + y]

subject to s'z = 0 and 0 <= z <= C. Each step picks the maximal
KKT-violating pair (largest gap between the I_up and I_low gradient
bounds), solves the two-variable subproblem analytically, and clips to
the box: the dual objective improves monotonically and sum(alpha -
alpha*) stays exactly zero. The prediction bias comes from free support
vectors, or the midpoint of the KKT interval when none are free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Standardization

KKT_TOL = 1e-3
MAX_PAIR_UPDATES = 100_000


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # linear | polynomial | rbf
    degree: int = 3
    gamma: float | None = None  # None: 1 / (p * var(X)) at fit time
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be > 0")

    def resolved_gamma(self, X: np.ndarray) -> float:
        if self.gamma is not None:
            return self.gamma
        var = float(np.asarray(X).var())
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def kernel_matrix(spec: KernelSpec, A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        return (gamma * (A @ B.T) + spec.coef0) ** spec.degree
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def dual_objective(beta, K, y, epsilon) -> float:
    """Maximization-form dual value of a coefficient vector."""
    beta = np.asarray(beta, dtype=float)
    return float(-0.5 * beta @ K @ beta - epsilon * np.abs(beta).sum()
                 + np.asarray(y, dtype=float) @ beta)


@dataclass(frozen=True)
class SvrModel:
    support_rows: np.ndarray  # all training rows; zero-coef rows are non-SVs
    dual_coef: np.ndarray  # alpha_i - alpha*_i per row
    bias: float
    kernel: KernelSpec
    gamma: float
    C: float
    epsilon: float
    standardization: Standardization | None = None
    converged: bool = True
    n_updates: int = 0

    @property
    def n_features(self) -> int:
        return self.support_rows.shape[1]


def fit_svr(X, y, C: float, epsilon: float, kernel: KernelSpec,
            standardization: Standardization | None = None,
            monitor=None, tol: float = KKT_TOL) -> SvrModel:
    """SMO fit; terminates when the worst KKT violation is <= tol (1e-3
    default), or returns the best iterate with converged=False after
    100,000 pair updates. `monitor(z, beta)`, when given, observes every
    iterate."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    if C <= 0:
        raise ValueError(f"C must be > 0, got {C}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")

    gamma = kernel.resolved_gamma(X)
    K = kernel_matrix(kernel, X, X, gamma)
    Kd = np.vstack([K, K])  # row t of the doubled problem maps to t mod n

    z = np.zeros(2 * n)
    s = np.concatenate([np.ones(n), -np.ones(n)])
    grad = np.concatenate([epsilon - y, epsilon + y])

    converged = False
    updates = 0
    m = M = 0.0
    while True:
        neg_sg = -s * grad
        in_up = np.where(s > 0, z < C, z > 0)
        in_low = np.where(s > 0, z > 0, z < C)
        i = int(np.argmax(np.where(in_up, neg_sg, -np.inf)))
        j = int(np.argmin(np.where(in_low, neg_sg, np.inf)))
        m, M = neg_sg[i], neg_sg[j]
        if m - M <= tol:
            converged = True
            break
        if updates >= MAX_PAIR_UPDATES:
            break

        ii, jj = i % n, j % n
        curv = K[ii, ii] + K[jj, jj] - 2.0 * K[ii, jj]
        cap_i = (C - z[i]) if s[i] > 0 else z[i]
        cap_j = z[j] if s[j] > 0 else (C - z[j])
        delta = (m - M) / curv if curv > 1e-12 else np.inf
        delta = min(delta, cap_i, cap_j)
        if delta <= 0:
            break  # boundary-locked; KKT gap cannot be reduced further
        z[i] += s[i] * delta
        z[j] -= s[j] * delta
        np.clip(z, 0.0, C, out=z)
        grad += delta * s * (Kd[:, ii] - Kd[:, jj])
        updates += 1
        if monitor is not None:
            monitor(z.copy(), z[:n] - z[n:])

    beta = z[:n] - z[n:]
    neg_sg = -s * grad
    free = (z > 1e-9 * C) & (z < C * (1 - 1e-9))
    if free.any():
        bias = float(neg_sg[free].mean())
    else:
        bias = float((m + M) / 2.0)
    return SvrModel(X, beta, bias, kernel, gamma, C, epsilon, standardization,
                    converged, updates)


def predict_svr(model: SvrModel, X) -> np.ndarray:
    """sum_i (alpha_i - alpha*_i) K(x_i, x) + b, standardizing raw rows first
    when the model carries fit statistics."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns, "
                         f"got {X.shape}")
    if model.standardization is not None:
        X = model.standardization.transform(X)
    K = kernel_matrix(model.kernel, X, model.support_rows, model.gamma)
    return K @ model.dual_coef + model.bias
