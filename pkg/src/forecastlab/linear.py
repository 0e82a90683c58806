"""Linear regression with elastic-net shrinkage via cyclic coordinate descent.

Objective, for an n x p design X and target y:

    (1/(2n)) * ||y - b - X beta||^2 + lam * (alpha * ||beta||_1
                                             + (1 - alpha)/2 * ||beta||_2^2)

alpha mixes the penalties (0 = ridge, 1 = lasso); the intercept b is never
penalized and is refitted as the mean of partial residuals each sweep.
The lam = 0 path is solved by normal equations instead of iterating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Standardization

CONVERGENCE_TOL = 1e-8
MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class PenaltySpec:
    lam: float
    alpha: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    penalty: PenaltySpec
    standardization: Standardization | None = None
    converged: bool = True
    n_sweeps: int = 0
    jitter_applied: bool = False
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(coefs)) or not np.isfinite(self.intercept):
            raise ValueError("non-finite linear fit")
        coefs = coefs.copy()
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[0]


def elastic_net_objective(X, y, intercept, beta, penalty: PenaltySpec) -> float:
    n = len(y)
    r = y - intercept - X @ beta
    loss = 0.5 * float(r @ r) / n
    pen = penalty.lam * (penalty.alpha * float(np.abs(beta).sum())
                         + 0.5 * (1.0 - penalty.alpha) * float(beta @ beta))
    return loss + pen


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _fit_unpenalized(X, y):
    """Normal equations; near-singular designs get a 1e-10 ridge jitter."""
    n = X.shape[0]
    A = np.column_stack([np.ones(n), X])
    gram = A.T @ A
    rhs = A.T @ y
    jitter = False
    try:
        sol = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
        # reject wildly inaccurate solutions from ill-conditioned grams
        if not np.allclose(gram @ sol, rhs, rtol=1e-6, atol=1e-6 * (1 + np.abs(rhs).max())):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        jitter = True
        sol = np.linalg.solve(gram + 1e-10 * n * np.eye(gram.shape[0]), rhs)
    return float(sol[0]), sol[1:], jitter


def fit_linear(X, y, penalty: PenaltySpec,
               standardization: Standardization | None = None) -> LinearModel:
    """Fit the elastic-net objective by cyclic coordinate descent.

    X is used as given (standardize upstream); `standardization`, when
    provided, is stored so predict_linear can accept raw feature rows.
    Converged when the largest coordinate update in a sweep drops below
    1e-8, capped at 10,000 sweeps. Lasso zeros are exact.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n != len(y):
        raise ValueError(f"X has {n} rows but y has {len(y)}")
    if n < 2:
        raise ValueError("need at least 2 rows to fit")

    if penalty.lam == 0.0:
        b, beta, jitter = _fit_unpenalized(X, y)
        obj = elastic_net_objective(X, y, b, beta, penalty)
        return LinearModel(b, beta, penalty, standardization,
                           converged=True, n_sweeps=0, jitter_applied=jitter,
                           objective_trace=(obj,))

    lam_l1 = penalty.lam * penalty.alpha
    lam_l2 = penalty.lam * (1.0 - penalty.alpha)
    col_ssq = (X * X).sum(axis=0) / n

    beta = np.zeros(p)
    b = float(y.mean())
    r = y - b  # residual excluding nothing: y - b - X beta, beta = 0
    trace = []
    converged = False
    sweeps = 0
    for sweeps in range(1, MAX_SWEEPS + 1):
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            if bj != 0.0:
                r += X[:, j] * bj
            rho = float(X[:, j] @ r) / n
            denom = col_ssq[j] + lam_l2
            new = _soft_threshold(rho, lam_l1) / denom if denom > 0 else 0.0
            if new != 0.0:
                r -= X[:, j] * new
            beta[j] = new
            max_delta = max(max_delta, abs(new - bj))
        # refit intercept as the mean of partial residuals
        new_b = float((r + b).mean())
        r += b - new_b
        max_delta = max(max_delta, abs(new_b - b))
        b = new_b
        trace.append(elastic_net_objective(X, y, b, beta, penalty))
        if max_delta < CONVERGENCE_TOL:
            converged = True
            break

    return LinearModel(b, beta, penalty, standardization,
                       converged=converged, n_sweeps=sweeps,
                       objective_trace=tuple(trace))


def lambda_max(X, y) -> float:
    """Smallest lasso lambda annihilating every coefficient: max_j |x_j'(y-ybar)|/n."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.abs(X.T @ (y - y.mean())).max()) / len(y)


def predict_linear(model: LinearModel, X) -> np.ndarray:
    """b + X beta, standardizing X first when the model carries fit statistics."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} feature columns, got {X.shape}")
    if model.standardization is not None:
        X = model.standardization.transform(X)
    return model.intercept + X @ model.coefficients
