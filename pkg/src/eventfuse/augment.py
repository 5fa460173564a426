"""Temporal filtering of externally collected item metadata.

Items retrieved for a class are kept only when the class's temporal model
scores their capture day at or above a threshold.  Undated items are
dropped outright: the filter exists to keep precision high, and an item
that cannot be checked cannot be vouched for.  Every input yields a
decision-log entry either way.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DimensionError, MissingModel
from .ingest import ItemRecord
from .temporal import TemporalModel


@dataclass(frozen=True)
class FilterDecision:
    item_id: str
    class_id: int
    day: Optional[int]
    score: Optional[float]
    kept: bool


def filter_by_temporal(
    items: Sequence[ItemRecord],
    class_ids: Sequence[int],
    models: Sequence[TemporalModel],
    threshold: float,
) -> list[FilterDecision]:
    """Decide keep/drop for each (item, claimed class) at the threshold."""
    if len(items) != len(class_ids):
        raise DimensionError(f"{len(items)} items but {len(class_ids)} class ids")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    by_class = {m.class_id: m for m in models}

    decisions = []
    for record, class_id in zip(items, class_ids):
        model = by_class.get(class_id)
        if model is None:
            raise MissingModel(f"no temporal model for class {class_id}")
        day = record.day
        if day is None:
            decisions.append(
                FilterDecision(record.item_id, class_id, day=None, score=None, kept=False)
            )
            continue
        score = model.score(day)
        decisions.append(
            FilterDecision(record.item_id, class_id, day=day, score=score, kept=score >= threshold)
        )
    return decisions


def decisions_to_csv(decisions: Sequence[FilterDecision]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["item_id", "class_id", "day", "score", "kept"])
    for d in decisions:
        writer.writerow(
            [
                d.item_id,
                d.class_id,
                "" if d.day is None else d.day,
                "" if d.score is None else repr(float(d.score)),
                "true" if d.kept else "false",
            ]
        )
    return buffer.getvalue()
