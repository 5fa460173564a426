"""Ranking metrics: per-class average precision and mean AP.

AP is the rank-based step sum: sort by score descending (ties broken by
ascending item index), then average precision@k over the ranks holding
relevant items.  An 11-point interpolated variant is available for
comparison with evaluations that used it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, NoPositives

AP_CONVENTIONS = ("step", "interp11")


@dataclass
class PrCurve:
    """One (recall, precision) point per relevant-item rank."""

    recalls: np.ndarray
    precisions: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recalls.tolist(), self.precisions.tolist()))

    def to_csv(self) -> str:
        lines = ["recall,precision"]
        for r, p in zip(self.recalls, self.precisions):
            lines.append(f"{float(r)!r},{float(p)!r}")
        return "\n".join(lines) + "\n"


@dataclass
class EvalReport:
    per_class_ap: np.ndarray
    mean_ap: float
    n_items: int
    n_classes: int

    def to_dict(self) -> dict:
        return {
            "map": self.mean_ap,
            "per_class": [
                {"class": c, "ap": float(ap)} for c, ap in enumerate(self.per_class_ap)
            ],
            "n_items": self.n_items,
            "n_classes": self.n_classes,
        }


def _ranked_relevance(scores, relevance) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    relevance = np.asarray(relevance)
    if scores.shape != relevance.shape or scores.ndim != 1:
        raise DimensionError(f"scores {scores.shape} vs relevance {relevance.shape}")
    if not np.any(relevance):
        raise NoPositives("no relevant items")
    # Stable sort on negated scores: ties resolve by ascending item index.
    order = np.argsort(-scores, kind="stable")
    return relevance[order].astype(bool)


def pr_curve(scores, relevance) -> PrCurve:
    ranked = _ranked_relevance(scores, relevance)
    n_pos = int(ranked.sum())
    ranks = np.nonzero(ranked)[0] + 1            # 1-based ranks of positives
    hits = np.arange(1, n_pos + 1)
    return PrCurve(recalls=hits / n_pos, precisions=hits / ranks)


def average_precision(scores, relevance, convention: str = "step") -> float:
    """Area under the precision/recall curve of one ranked class."""
    curve = pr_curve(scores, relevance)
    if convention == "step":
        return float(curve.precisions.mean())
    if convention == "interp11":
        levels = np.linspace(0.0, 1.0, 11)
        # Precision envelope: best precision at recall >= level.
        envelope = np.maximum.accumulate(curve.precisions[::-1])[::-1]
        values = [
            float(envelope[curve.recalls >= level][0]) if np.any(curve.recalls >= level) else 0.0
            for level in levels
        ]
        return float(np.mean(values))
    raise ValueError(f"unknown AP convention {convention!r}")


def evaluate(probabilities: np.ndarray, labels, convention: str = "step") -> EvalReport:
    """Per-class AP over probability columns, averaged into mAP."""
    probs = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != len(labels):
        raise DimensionError(f"probs {probs.shape} vs labels {labels.shape}")
    n_classes = probs.shape[1]
    per_class = np.empty(n_classes)
    for c in range(n_classes):
        relevance = labels == c
        if not np.any(relevance):
            raise NoPositives(f"class {c} absent from labels")
        per_class[c] = average_precision(probs[:, c], relevance, convention)
    return EvalReport(
        per_class_ap=per_class,
        mean_ap=float(per_class.mean()),
        n_items=len(labels),
        n_classes=n_classes,
    )


def report_to_json(report: EvalReport, provenance: Optional[dict] = None) -> str:
    payload = report.to_dict()
    if provenance is not None:
        payload["provenance"] = provenance
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def save_report(path, report: EvalReport, provenance: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(report_to_json(report, provenance=provenance))
