"""Per-class temporal occurrence models over the day-of-year axis.

A model is built from capture dates: count days into a 365-bin histogram,
pad the ends circularly so the year wrap-around does not distort the fit,
smooth with a cubic spline, then clamp negatives and peak-normalize to
[0, 1].  The resulting 365 scores act as per-day likelihood-like weights
for one event class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import MissingModel, NoTimestamps
from .spline import DEFAULT_SMOOTHING, fit_smoothing_spline

DAYS_PER_YEAR = 365
DEFAULT_PAD = 30


@dataclass(frozen=True)
class TemporalModel:
    """365 scores in [0, 1] (peak exactly 1) for one event class."""

    class_id: int
    scores: np.ndarray          # (365,) float64
    n_samples: int

    def score(self, day: int) -> float:
        """Score for a day-of-year index in 1..365."""
        if not 1 <= day <= DAYS_PER_YEAR:
            raise ValueError(f"day {day} outside 1..365")
        return float(self.scores[day - 1])


def build_histogram(days: Iterable[int]) -> np.ndarray:
    """Multiplicity of each day-of-year; empty input gives all zeros."""
    counts = np.zeros(DAYS_PER_YEAR, dtype=np.int64)
    for day in days:
        if not 1 <= day <= DAYS_PER_YEAR:
            raise ValueError(f"day {day} outside 1..365")
        counts[day - 1] += 1
    return counts


def fit_temporal_model(
    days: Sequence[int],
    class_id: int = 0,
    p: float = DEFAULT_SMOOTHING,
    pad: int = DEFAULT_PAD,
) -> TemporalModel:
    """Histogram -> circular pad -> smoothing spline -> clamp -> normalize."""
    days = list(days)
    if not days:
        raise NoTimestamps(f"class {class_id} has no capture dates")
    counts = build_histogram(days).astype(float)

    if pad < 0:
        raise ValueError(f"pad must be non-negative, got {pad}")
    if pad > 0:
        y = np.concatenate([counts[-pad:], counts, counts[:pad]])
    else:
        y = counts
    x = np.arange(1 - pad, DAYS_PER_YEAR + pad + 1, dtype=float)

    fit = fit_smoothing_spline(x, y, p=p)
    raw = fit(np.arange(1, DAYS_PER_YEAR + 1, dtype=float))
    raw = np.maximum(raw, 0.0)
    peak = raw.max()
    if peak <= 0.0:
        raise ValueError(f"class {class_id}: smoothed histogram is non-positive everywhere")
    return TemporalModel(class_id=class_id, scores=raw / peak, n_samples=len(days))


def score_vector(models: Sequence[TemporalModel], day: int) -> np.ndarray:
    """Scores of every class model at one day; models must cover 0..C-1."""
    check_model_coverage(models)
    return np.array([m.score(day) for m in models])


def check_model_coverage(models: Sequence[TemporalModel], n_classes: Optional[int] = None) -> None:
    """Raise MissingModel unless models are exactly classes 0..C-1 in order."""
    if n_classes is None:
        n_classes = len(models)
    ids = [m.class_id for m in models]
    if ids != list(range(n_classes)):
        raise MissingModel(f"expected models for classes 0..{n_classes - 1}, got {ids}")


# --- serialization ----------------------------------------------------------


def models_to_json(models: Sequence[TemporalModel], provenance: Optional[dict] = None) -> str:
    payload = [
        {
            "class_id": m.class_id,
            "n_samples": m.n_samples,
            "scores": [float(s) for s in m.scores],
        }
        for m in models
    ]
    if provenance is not None:
        payload = {"models": payload, "provenance": provenance}
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def models_from_json(text: str) -> list[TemporalModel]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["models"]
    models = []
    for obj in data:
        scores = np.asarray(obj["scores"], dtype=float)
        if scores.shape != (DAYS_PER_YEAR,):
            raise MissingModel(
                f"class {obj['class_id']}: expected 365 scores, got {len(scores)}"
            )
        models.append(
            TemporalModel(
                class_id=int(obj["class_id"]),
                scores=scores,
                n_samples=int(obj["n_samples"]),
            )
        )
    return models


def save_models(path, models: Sequence[TemporalModel], provenance: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(models_to_json(models, provenance=provenance))


def load_models(path) -> list[TemporalModel]:
    with open(path, encoding="utf-8") as handle:
        return models_from_json(handle.read())
