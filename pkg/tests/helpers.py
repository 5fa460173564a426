"""Independent oracles the tests check the package against.

These deliberately take slow, simple routes: a dense basis-and-quadrature
quadratic program for the smoothing spline, projected gradient descent for
the SVM dual, and plain scalar re-derivations of the element-wise rules.
None of them share code with the implementations they check.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline


def spline_oracle_knot_values(x, y, w, p, grid_points=10_000):
    """Minimize the smoothing objective over natural cubic splines by brute
    force: build the curvature Gram matrix from per-basis second derivatives
    on a dense grid (Simpson per interval) and solve the dense normal
    equations (p W + (1 - p) K) a = p W y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = len(x)
    per_interval = max(3, grid_points // (n - 1)) | 1  # odd point count

    second_derivs = []
    for i in range(n):
        unit = np.zeros(n)
        unit[i] = 1.0
        basis = CubicSpline(x, unit, bc_type="natural")
        second_derivs.append(basis.derivative(2))

    gram = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            total = 0.0
            for k in range(n - 1):
                grid = np.linspace(x[k], x[k + 1], per_interval)
                values = second_derivs[a](grid) * second_derivs[b](grid)
                step = (x[k + 1] - x[k]) / (per_interval - 1)
                total += (
                    step
                    / 3.0
                    * (values[0] + values[-1] + 4 * values[1::2].sum() + 2 * values[2:-1:2].sum())
                )
            gram[a, b] = gram[b, a] = total

    weight = np.diag(w)
    return np.linalg.solve(p * weight + (1 - p) * gram, p * w * y)


def natural_spline_objective(x, a, y, w, p):
    """Smoothing objective of the natural cubic spline through (x, a),
    evaluated against data (y, w).  Curvature from the interpolant's own
    piecewise-linear second derivative (exact closed form per interval)."""
    spline = CubicSpline(x, a, bc_type="natural")
    second = spline.derivative(2)
    s = second(x)
    h = np.diff(x)
    curvature = float(np.sum(h * (s[:-1] ** 2 + s[:-1] * s[1:] + s[1:] ** 2) / 3.0))
    residual = float(np.sum(w * (y - a) ** 2))
    return p * residual + (1 - p) * curvature


def svm_dual_oracle(X, y, cost, iterations=200_000):
    """Projected gradient descent on the SVM dual (bias via augmented
    feature): minimize 0.5 a'Qa - sum(a) over the box [0, cost]^n.
    Returns the final dual objective value."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    augmented = np.hstack([X, np.ones((len(y), 1))])
    signed = augmented * y[:, None]
    gram = signed @ signed.T
    step = 1.0 / np.linalg.eigvalsh(gram).max()
    alpha = np.zeros(len(y))
    for _ in range(iterations):
        gradient = gram @ alpha - 1.0
        alpha = np.clip(alpha - step * gradient, 0.0, cost)
    return 0.5 * alpha @ gram @ alpha - alpha.sum()


def refine_scalar(probabilities, scores):
    """Element-by-element re-derivation of the asymmetric rule in plain
    Python floats."""
    out = []
    for p, s in zip(probabilities, scores):
        d = p - s
        w = (d if d > 0 else 0.0) + 1.0
        out.append(p / w)
    return out


def average_precision_by_enumeration(scores, relevance):
    """AP from first principles: walk the ranking, accumulate precision at
    every relevant item."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if relevance[idx]:
            hits += 1
            total += hits / rank
    return total / hits
