"""Seeded synthetic dataset generator for desk-scale verification.

Each class gets a feature mean on the unit sphere per source; confusable
pairs share a mean up to an offset of half the expected noise radius, so
their items overlap visually.  Capture dates are drawn uniformly from a
per-class day-of-year window and attached with a configurable coverage
probability.  The whole dataset is a pure function of the config and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ingest import FeatureMatrix, ItemRecord, date_for_day


@dataclass(frozen=True)
class SynthConfig:
    n_classes: int
    per_class_train: int
    per_class_test: int
    feature_dim: int
    feature_noise: float
    date_windows: tuple                  # one (first_day, last_day) per class
    timestamp_coverage: float = 1.0
    confusable_pairs: tuple = ()
    n_sources: int = 1
    per_class_validation: int = 0

    def validate(self) -> None:
        problems = []
        if self.n_classes < 2:
            problems.append(f"n_classes must be >= 2, got {self.n_classes}")
        if self.per_class_train < 2:
            problems.append("per_class_train must be >= 2")
        if self.per_class_test < 1:
            problems.append("per_class_test must be >= 1")
        if self.per_class_validation < 0:
            problems.append("per_class_validation must be >= 0")
        if self.feature_dim < 1:
            problems.append("feature_dim must be >= 1")
        if self.feature_noise < 0:
            problems.append("feature_noise must be >= 0")
        if not 0.0 <= self.timestamp_coverage <= 1.0:
            problems.append("timestamp_coverage must lie in [0, 1]")
        if self.n_sources < 1:
            problems.append("n_sources must be >= 1")
        if len(self.date_windows) != self.n_classes:
            problems.append(
                f"{len(self.date_windows)} date windows for {self.n_classes} classes"
            )
        for c, window in enumerate(self.date_windows):
            if len(window) != 2 or not (1 <= window[0] <= window[1] <= 365):
                problems.append(f"class {c}: invalid date window {window}")
        for pair in self.confusable_pairs:
            if len(pair) != 2 or not all(0 <= x < self.n_classes for x in pair) or pair[0] == pair[1]:
                problems.append(f"invalid confusable pair {pair}")
        if problems:
            raise ConfigError(problems)


@dataclass
class SynthDataset:
    records: list[ItemRecord]
    sources: list[FeatureMatrix]
    truth: dict                           # item_id -> class label


def _class_means(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    dim = config.feature_dim
    means = np.empty((config.n_classes, dim))
    paired_with: dict[int, int] = {}
    for a, b in config.confusable_pairs:
        paired_with[max(a, b)] = min(a, b)
    for c in range(config.n_classes):
        if c in paired_with:
            base = means[paired_with[c]]
            offset = rng.normal(size=dim)
            offset *= 1.0 / np.linalg.norm(offset)
            means[c] = base + 0.5 * config.feature_noise * np.sqrt(dim) * offset
        else:
            v = rng.normal(size=dim)
            means[c] = v / np.linalg.norm(v)
    return means


def generate_synthetic(config: SynthConfig, seed: int = 0) -> SynthDataset:
    """Deterministic manifest, per-source feature matrices, and labels."""
    config.validate()
    rng = np.random.default_rng(seed)
    means = [_class_means(config, rng) for _ in range(config.n_sources)]

    split_sizes = (
        ("train", config.per_class_train),
        ("validation", config.per_class_validation),
        ("test", config.per_class_test),
    )
    records: list[ItemRecord] = []
    labels: list[int] = []
    counter = 0
    for split, size in split_sizes:
        for c in range(config.n_classes):
            first, last = config.date_windows[c]
            for _ in range(size):
                item_id = f"i{counter:06d}"
                counter += 1
                dated = rng.random() < config.timestamp_coverage
                day = int(rng.integers(first, last + 1)) if dated else None
                records.append(
                    ItemRecord(
                        item_id=item_id,
                        split=split,
                        label=c,
                        capture_date=date_for_day(day) if dated else None,
                    )
                )
                labels.append(c)

    n_items = len(records)
    sources = []
    for k in range(config.n_sources):
        noise = rng.normal(0.0, 1.0, size=(n_items, config.feature_dim))
        values = means[k][labels] + config.feature_noise * noise
        sources.append(
            FeatureMatrix(
                source_name=f"src{k}",
                values=values.astype(np.float32),
                row_ids=[rec.item_id for rec in records],
            )
        )
    truth = {rec.item_id: rec.label for rec in records}
    return SynthDataset(records=records, sources=sources, truth=truth)
