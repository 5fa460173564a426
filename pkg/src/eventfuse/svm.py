"""Binary linear SVM trained by dual coordinate descent.

Solves the L2-regularized hinge-loss problem through its box-constrained
dual: minimize 0.5 a' Q a - sum(a) with 0 <= a_i <= cost and
Q_ij = y_i y_j x_i . x_j.  The bias is absorbed by a constant-1 feature,
so it is regularized like any other weight.  Each epoch visits the
examples in a freshly drawn seeded permutation and performs the exact
per-coordinate minimization; training stops when the largest projected
gradient seen in an epoch drops below 1e-4, or after 1000 epochs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DegenerateLabels, DimensionError

DEFAULT_COST = 1.0
DEFAULT_TOLERANCE = 1e-4
MAX_EPOCHS = 1000
_EPOCH_CHUNK = 100


@dataclass
class BinarySvm:
    """Trained hyperplane: weights (feature_dim), bias, and box bound."""

    weights: np.ndarray
    bias: float
    cost: float

    @property
    def feature_dim(self) -> int:
        return len(self.weights)


@njit(cache=True)
def _cd_sweeps(xy, q_diag, alpha, w, cost, perms, tol):
    """Run one permutation per row of `perms`; stop early under `tol`.

    Returns (epochs_run, converged, last_max_violation).  `w` and `alpha`
    are updated in place; `xy` holds label-signed augmented rows.
    """
    n, d = xy.shape
    max_violation = np.inf
    for e in range(perms.shape[0]):
        max_violation = 0.0
        for k in range(n):
            i = perms[e, k]
            row = xy[i]
            g = -1.0
            for j in range(d):
                g += row[j] * w[j]
            a = alpha[i]
            if a <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a >= cost:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if abs(pg) > max_violation:
                max_violation = abs(pg)
            if pg != 0.0:
                new_a = a - g / q_diag[i]
                if new_a < 0.0:
                    new_a = 0.0
                elif new_a > cost:
                    new_a = cost
                delta = new_a - a
                if delta != 0.0:
                    alpha[i] = new_a
                    for j in range(d):
                        w[j] += delta * row[j]
        if max_violation < tol:
            return e + 1, True, max_violation
    return perms.shape[0], False, max_violation


def solve_dual(
    X: np.ndarray,
    y: np.ndarray,
    cost: float = DEFAULT_COST,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[BinarySvm, np.ndarray]:
    """Train and also return the dual variables (for diagnostics)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise DimensionError(f"X {X.shape} does not align with y {y.shape}")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateLabels("training labels must include both signs")
    if cost <= 0:
        raise ValueError(f"cost must be positive, got {cost}")

    n = X.shape[0]
    augmented = np.hstack([X, np.ones((n, 1))])
    xy = np.ascontiguousarray(augmented * y[:, None])
    q_diag = np.einsum("ij,ij->i", xy, xy)

    alpha = np.zeros(n)
    w = np.zeros(X.shape[1] + 1)
    rng = np.random.default_rng(seed)

    epochs = 0
    while epochs < MAX_EPOCHS:
        chunk = min(_EPOCH_CHUNK, MAX_EPOCHS - epochs)
        perms = np.empty((chunk, n), dtype=np.int64)
        for e in range(chunk):
            perms[e] = rng.permutation(n)
        ran, converged, _ = _cd_sweeps(xy, q_diag, alpha, w, float(cost), perms, tolerance)
        epochs += ran
        if converged:
            break

    # Box feasibility is structural (every update clips); assert it anyway.
    if np.any(alpha < 0) or np.any(alpha > cost):
        raise AssertionError("dual variables left the feasible box")
    model = BinarySvm(weights=w[:-1].copy(), bias=float(w[-1]), cost=float(cost))
    return model, alpha


def train_binary_svm(
    X: np.ndarray,
    y: np.ndarray,
    cost: float = DEFAULT_COST,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> BinarySvm:
    """Train on rows X with labels y in {-1, +1}."""
    model, _ = solve_dual(X, y, cost=cost, seed=seed, tolerance=tolerance)
    return model


def decision_values(model: BinarySvm, X: np.ndarray) -> np.ndarray:
    """w . x + b per row."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.feature_dim:
        raise DimensionError(
            f"{X.shape[1]} feature columns, model expects {model.feature_dim}"
        )
    values = X @ model.weights + model.bias
    return values[0] if single else values


def hinge_losses(model: BinarySvm, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """max(0, 1 - y * (w.x + b)) per training row."""
    return np.maximum(0.0, 1.0 - np.asarray(y, dtype=float) * decision_values(model, X))


def primal_objective(model: BinarySvm, X: np.ndarray, y: np.ndarray) -> float:
    """0.5 ||(w, b)||^2 + cost * sum of hinge losses (bias regularized)."""
    norm_sq = float(model.weights @ model.weights) + model.bias**2
    return 0.5 * norm_sq + model.cost * float(np.sum(hinge_losses(model, X, y)))


def dual_objective(model: BinarySvm, alpha: np.ndarray) -> float:
    """0.5 ||(w, b)||^2 - sum(alpha), the dual value at the returned point."""
    norm_sq = float(model.weights @ model.weights) + model.bias**2
    return 0.5 * norm_sq - float(np.sum(alpha))
