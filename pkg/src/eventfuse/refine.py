"""Asymmetric temporal re-weighting of classifier probabilities.

Temporal evidence is treated as one-sided: a class whose temporal score is
at least its predicted probability is left untouched (many events share
dates, so agreement is weak evidence), while a class predicted *above* its
temporal score is divided down in proportion to the disagreement:

    d = P - s,  weight = max(d, 0) + 1,  refined = P / weight

The output is deliberately not renormalized; refined vectors are ranking
scores, not calibrated probabilities, and each entry only ever shrinks
(never below half its input).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import BadScore, DimensionError
from .temporal import TemporalModel, check_model_coverage, score_vector


def refinement_weights(probabilities: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Per-class weights max(P - s, 0) + 1; always in [1, 2]."""
    return np.maximum(probabilities - scores, 0.0) + 1.0


def refine(probabilities, scores) -> np.ndarray:
    """Refine one probability vector with per-class temporal scores."""
    p = np.asarray(probabilities, dtype=float)
    s = np.asarray(scores, dtype=float)
    if p.shape != s.shape or p.ndim != 1:
        raise DimensionError(f"probabilities {p.shape} vs scores {s.shape}")
    if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
        raise BadScore("temporal scores must lie in [0, 1]")
    return p / refinement_weights(p, s)


def refine_batch(
    probabilities: np.ndarray,
    days: Sequence[Optional[int]],
    models: Sequence[TemporalModel],
) -> np.ndarray:
    """Refine each row that has a capture day; undated rows pass through."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 2:
        raise DimensionError(f"expected a 2-D probability matrix, got shape {p.shape}")
    if len(days) != p.shape[0]:
        raise DimensionError(f"{p.shape[0]} rows but {len(days)} days")
    check_model_coverage(models, p.shape[1])

    # One scores row per day of year covers every dated item.
    table = np.stack([m.scores for m in models], axis=1)  # (365, C)
    out = p.copy()
    for i, day in enumerate(days):
        if day is None:
            continue
        if not 1 <= day <= table.shape[0]:
            raise BadScore(f"row {i}: day {day} outside 1..365")
        out[i] = p[i] / refinement_weights(p[i], table[day - 1])
    return out


__all__ = ["refine", "refine_batch", "refinement_weights", "score_vector"]
