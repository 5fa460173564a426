"""Sigmoid calibration of decision values (Platt's method).

Fits p(f) = 1 / (1 + exp(A*f + B)) by Newton iteration on the
cross-entropy against smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2),
with a halving line search and a ridge term keeping the 2x2 Hessian
positive definite.  With the positive class at larger decision values the
fitted A is negative, so p increases with f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CalibrationFailure, DegenerateLabels, DimensionError

_MAX_NEWTON_ITERATIONS = 100
_MIN_STEP = 1e-10
_RIDGE = 1e-12
_GRADIENT_TOL = 1e-5


@dataclass
class SigmoidCalibrator:
    """Two-parameter sigmoid p(f) = 1 / (1 + exp(A*f + B))."""

    A: float
    B: float

    def predict(self, f) -> np.ndarray:
        return expit(-(self.A * np.asarray(f, dtype=float) + self.B))


def _cross_entropy(f_a_plus_b: np.ndarray, targets: np.ndarray) -> float:
    # t*fApB + log(1 + exp(-fApB)) in the overflow-safe split form.
    positive = f_a_plus_b >= 0
    values = np.where(
        positive,
        targets * f_a_plus_b + np.log1p(np.exp(-np.abs(f_a_plus_b))),
        (targets - 1.0) * f_a_plus_b + np.log1p(np.exp(-np.abs(f_a_plus_b))),
    )
    return float(np.sum(values))


def fit_sigmoid(decisions, labels) -> SigmoidCalibrator:
    """Fit the calibrator on decision values and their {-1, +1} labels."""
    f = np.asarray(decisions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise DimensionError(f"decisions {f.shape} vs labels {y.shape}")
    positives = y > 0
    n_pos = int(np.sum(positives))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("calibration needs both label signs")

    targets = np.where(positives, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    A = 0.0
    B = np.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = _cross_entropy(A * f + B, targets)

    for _ in range(_MAX_NEWTON_ITERATIONS):
        f_a_plus_b = A * f + B
        p = expit(-f_a_plus_b)
        d2 = p * (1.0 - p)
        g1 = float(np.sum(f * (targets - p)))
        g2 = float(np.sum(targets - p))
        if abs(g1) < _GRADIENT_TOL and abs(g2) < _GRADIENT_TOL:
            return SigmoidCalibrator(A=A, B=B)
        h11 = float(np.sum(f * f * d2)) + _RIDGE
        h22 = float(np.sum(d2)) + _RIDGE
        h21 = float(np.sum(f * d2))
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB

        step = 1.0
        while step >= _MIN_STEP:
            new_a = A + step * dA
            new_b = B + step * dB
            new_fval = _cross_entropy(new_a * f + new_b, targets)
            if new_fval < fval + 1e-4 * step * gd:
                A, B, fval = new_a, new_b, new_fval
                break
            step /= 2.0
        else:
            # No descent step exists at floating precision; the iterate is
            # as converged as it will get.
            return SigmoidCalibrator(A=A, B=B)

    raise CalibrationFailure(
        f"Newton did not converge in {_MAX_NEWTON_ITERATIONS} iterations"
    )


def pair_probability(calibrator: SigmoidCalibrator, decisions) -> np.ndarray:
    """Calibrated probability of the positive class for decision values."""
    return calibrator.predict(decisions)
