"""Cubic smoothing splines by the classic banded second-derivative method.

Minimizes

    p * sum_j w_j (y_j - f(x_j))^2  +  (1 - p) * integral f''(t)^2 dt

over natural cubic splines with knots at the data abscissae.  Writing
a_j = f(x_j) and g = (f''(x_2), ..., f''(x_{n-1})) (natural ends are zero),
the spline identity Q^T a = T g turns the problem into one symmetric
positive-definite banded solve:

    (p T + (1 - p) Q^T W^{-1} Q) g = p Q^T y
    a = y - ((1 - p) / p) W^{-1} Q g

where T is the tridiagonal curvature Gram matrix and Q^T the second
divided-difference operator.  p = 1 reproduces the natural interpolant;
p -> 0 flattens toward the weighted least-squares line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import BadKnots, BadSmoothing, TooFewKnots

# Interpolation/smoothing trade-off 1 / (1 + h^3 / 6) for unit knot spacing.
DEFAULT_SMOOTHING = 1.0 / (1.0 + 1.0 / 6.0)


@dataclass
class SplineFit:
    """Fitted piecewise cubic: knots, 4 local power-basis coefficients per
    interval (constant, linear, quadratic, cubic in x - x_i), and p."""

    knots: np.ndarray             # (n,) strictly increasing
    coefficients: np.ndarray      # (n - 1, 4)
    smoothing: float

    @property
    def knot_values(self) -> np.ndarray:
        """Fitted values at the knots."""
        return np.append(self.coefficients[:, 0], self(self.knots[-1]))

    def _interval(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(idx, 0, len(self.knots) - 2)

    def __call__(self, x) -> np.ndarray:
        """Evaluate the spline on [knots[0], knots[-1]] (clamped outside)."""
        x = np.asarray(x, dtype=float)
        idx = self._interval(x)
        t = x - self.knots[idx]
        c0, c1, c2, c3 = self.coefficients[idx].T
        return ((c3 * t + c2) * t + c1) * t + c0

    def second_derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = self._interval(x)
        t = x - self.knots[idx]
        return 2.0 * self.coefficients[idx, 2] + 6.0 * self.coefficients[idx, 3] * t


def fit_smoothing_spline(x, y, w=None, p: float = DEFAULT_SMOOTHING) -> SplineFit:
    """Fit the penalized natural cubic spline through (x, y) with weights w.

    x must be strictly increasing with at least 3 entries, weights positive,
    and p in (0, 1].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3:
        raise TooFewKnots(f"need at least 3 knots, got {n}")
    if y.shape != x.shape:
        raise BadKnots(f"{n} knots but {len(y)} ordinates")
    h = np.diff(x)
    if np.any(h <= 0):
        raise BadKnots("knot abscissae must be strictly increasing")
    if not np.isfinite(p) or not 0.0 < p <= 1.0:
        raise BadSmoothing(f"smoothing parameter {p!r} outside (0, 1]")
    if w is None:
        w = np.ones(n)
    else:
        w = np.asarray(w, dtype=float)
        if w.shape != x.shape:
            raise BadKnots(f"{n} knots but {len(w)} weights")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")

    e = 1.0 / h                     # n - 1 inverse spacings
    inv_w = 1.0 / w

    # T: tridiagonal Gram matrix of piecewise-linear second derivatives,
    # restricted to interior knots.  (n - 2) x (n - 2).
    t_diag = (h[:-1] + h[1:]) / 3.0
    t_off = h[1:-1] / 6.0

    # A = Q^T W^{-1} Q, pentadiagonal.  Column i of Q touches rows i..i+2
    # with entries e_i, -(e_i + e_{i+1}), e_{i+1}.
    mid = -(e[:-1] + e[1:])         # n - 2 center entries
    a_diag = e[:-1] ** 2 * inv_w[:-2] + mid**2 * inv_w[1:-1] + e[1:] ** 2 * inv_w[2:]
    a_off1 = mid[:-1] * e[1:-1] * inv_w[1:-2] + e[1:-1] * mid[1:] * inv_w[2:-1]
    a_off2 = e[1:-2] * e[2:-1] * inv_w[2:-2]

    # Upper banded storage for solveh_banded: row k holds superdiagonal 2-k.
    m = n - 2
    bands = np.zeros((3, m))
    bands[2] = p * t_diag + (1.0 - p) * a_diag
    if m > 1:
        bands[1, 1:] = p * t_off + (1.0 - p) * a_off1
    if m > 2:
        bands[0, 2:] = (1.0 - p) * a_off2

    rhs = p * (e[:-1] * y[:-2] - (e[:-1] + e[1:]) * y[1:-1] + e[1:] * y[2:])
    gamma = solveh_banded(bands, rhs, lower=False)

    # a = y - ((1 - p)/p) W^{-1} Q gamma;  Q gamma via two differences.
    sigma = np.zeros(n)
    sigma[1:-1] = gamma             # natural ends stay zero
    q_gamma = np.diff(e * np.diff(sigma), prepend=0.0, append=0.0)
    a = y - ((1.0 - p) / p) * inv_w * q_gamma

    coefficients = np.empty((n - 1, 4))
    coefficients[:, 0] = a[:-1]
    coefficients[:, 1] = np.diff(a) / h - h * (2.0 * sigma[:-1] + sigma[1:]) / 6.0
    coefficients[:, 2] = sigma[:-1] / 2.0
    coefficients[:, 3] = np.diff(sigma) / (6.0 * h)
    return SplineFit(knots=x.copy(), coefficients=coefficients, smoothing=float(p))


def penalized_objective(fit: SplineFit, y, w=None) -> float:
    """Value of the smoothing objective attained by a fit on data (x, y, w).

    The curvature integral is exact: f'' is piecewise linear, so each
    interval contributes h * (s0^2 + s0*s1 + s1^2) / 3.
    """
    y = np.asarray(y, dtype=float)
    if w is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(w, dtype=float)
    a = fit.knot_values
    h = np.diff(fit.knots)
    s = np.empty(len(fit.knots))
    s[:-1] = 2.0 * fit.coefficients[:, 2]
    s[-1] = 2.0 * fit.coefficients[-1, 2] + 6.0 * fit.coefficients[-1, 3] * h[-1]
    curvature = np.sum(h * (s[:-1] ** 2 + s[:-1] * s[1:] + s[1:] ** 2) / 3.0)
    residual = np.sum(w * (y - a) ** 2)
    p = fit.smoothing
    return p * residual + (1.0 - p) * curvature
