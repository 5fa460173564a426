"""Class probabilities from pairwise binary probabilities.

Given r_ab = p(class a | {a, b}) for every unordered pair, recovers a
single distribution p by minimizing sum over a != b of
(r_ba * p_a - r_ab * p_b)^2 subject to p >= 0, sum(p) = 1.  The stationary
conditions are solved by the standard normalized fixed-point sweep on the
quadratic form p' Q p, iterated until the residual max_t |(Qp)_t - p'Qp|
falls below 1e-10.  The sweep is vectorized across rows so a whole
probability matrix couples in one call.
"""

from __future__ import annotations

import numpy as np

from .errors import BadPairwise

RESIDUAL_TOL = 1e-10
_MAX_SWEEPS = 10_000
_CONSISTENCY_TOL = 1e-6


def _coupling_matrix(r: np.ndarray) -> np.ndarray:
    """Q with Q_tt = sum_{j != t} r_jt^2 and Q_tj = -r_jt * r_tj."""
    n_rows, c, _ = r.shape
    q = -r.transpose(0, 2, 1) * r
    diag = np.einsum("njt,njt->nt", r, r) - np.einsum("ntt->nt", r) ** 2
    idx = np.arange(c)
    q[:, idx, idx] = diag
    return q


def couple_pairwise_batch(r: np.ndarray) -> np.ndarray:
    """Couple a stack of pairwise matrices; rows are independent problems."""
    r = np.asarray(r, dtype=float)
    if r.ndim == 2:
        return couple_pairwise_batch(r[None])[0]
    n_rows, c, c2 = r.shape
    if c != c2:
        raise BadPairwise(f"pairwise matrix must be square, got {c}x{c2}")
    if c < 2:
        raise BadPairwise("need at least two classes")

    off = ~np.eye(c, dtype=bool)
    if np.any(np.abs(r + r.transpose(0, 2, 1) - 1.0)[:, off] > _CONSISTENCY_TOL):
        raise BadPairwise("r_ab + r_ba must equal 1 for every pair")
    if np.any(r[:, off] <= 0.0) or np.any(r[:, off] >= 1.0):
        raise BadPairwise("pairwise probabilities must lie strictly inside (0, 1)")

    q = _coupling_matrix(r)
    p = np.full((n_rows, c), 1.0 / c)

    for _ in range(_MAX_SWEEPS):
        # Recompute residual from scratch each sweep for numerical honesty.
        qp = np.einsum("ntj,nj->nt", q, p)
        pqp = np.einsum("nt,nt->n", p, qp)
        if np.max(np.abs(qp - pqp[:, None])) < RESIDUAL_TOL:
            break
        for t in range(c):
            diff = (pqp - qp[:, t]) / q[:, t, t]
            p[:, t] += diff
            pqp = (pqp + diff * (diff * q[:, t, t] + 2.0 * qp[:, t])) / (1.0 + diff) ** 2
            qp = (qp + diff[:, None] * q[:, t, :]) / (1.0 + diff)[:, None]
            p /= (1.0 + diff)[:, None]
    return p


def couple_pairwise(r: np.ndarray) -> np.ndarray:
    """Couple one C x C pairwise-probability matrix into a distribution."""
    return couple_pairwise_batch(np.asarray(r, dtype=float))
