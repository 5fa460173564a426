"""Two-level late fusion of per-source classifiers.

Level one trains an independent multi-class model per feature source.
Level two trains a multi-class model whose inputs are the per-source
class-probability blocks, so every source contributes exactly C columns
regardless of its raw dimensionality.  The high-level training matrix is
built from out-of-fold predictions (in-sample probabilities of the
low-level models would be optimistically sharp).

Temporal refinement can be placed on the low-level outputs, the final
output, both, or neither; at the low level it is applied to the stacking
inputs as well, so training and prediction see the same distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._seeds import derive_seed
from .classifier import (
    MultiClassModel,
    multiclass_from_dict,
    multiclass_to_dict,
    predict_proba,
    train_multiclass,
)
from .errors import AlignmentError, ConfigError, DimensionError, MissingModel
from .ingest import FeatureMatrix, ItemRecord
from .refine import refine_batch
from .svm import DEFAULT_COST
from .temporal import TemporalModel, check_model_coverage

PLACEMENTS = ("none", "low", "high", "both")
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class StackingPlan:
    """Out-of-fold schedule for building the high-level training matrix."""

    n_folds: int = DEFAULT_FOLDS
    seed: int = 0

    def __post_init__(self):
        if self.n_folds < 2:
            raise ConfigError(f"n_folds must be >= 2, got {self.n_folds}")


@dataclass
class FusionModel:
    low_models: list[MultiClassModel]
    high_model: MultiClassModel
    placement: str
    class_count: int

    @property
    def source_names(self) -> list[str]:
        return [m.source_name for m in self.low_models]


def stacked_input_dim(n_sources: int, n_classes: int) -> int:
    """Width of the high-level feature space: C columns per source."""
    return n_sources * n_classes


def check_placement(placement: str) -> str:
    if placement not in PLACEMENTS:
        raise ConfigError(f"placement must be one of {PLACEMENTS}, got {placement!r}")
    return placement


def _align_rows(source: FeatureMatrix, item_ids: Sequence[str]) -> np.ndarray:
    index = source.index_of()
    missing = [item_id for item_id in item_ids if item_id not in index]
    if missing:
        raise AlignmentError(
            f"source {source.source_name!r} lacks {len(missing)} item ids "
            f"(first: {missing[0]!r})"
        )
    rows = np.fromiter((index[i] for i in item_ids), dtype=np.int64, count=len(item_ids))
    return source.values[rows].astype(np.float64)


def _stratified_fold_ids(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    order = np.random.default_rng(seed).permutation(len(labels))
    folds = np.empty(len(labels), dtype=np.int64)
    counters: dict[int, int] = {}
    for idx in order:
        label = int(labels[idx])
        k = counters.get(label, 0)
        folds[idx] = k % n_folds
        counters[label] = k + 1
    return folds


def training_items(
    manifest: Sequence[ItemRecord], include_validation: bool = False
) -> list[ItemRecord]:
    splits = {"train", "validation"} if include_validation else {"train"}
    items = [rec for rec in manifest if rec.split in splits]
    unlabeled = [rec.item_id for rec in items if rec.label is None]
    if unlabeled:
        raise AlignmentError(f"items without labels in training splits: {unlabeled[:3]}")
    return items


def train_fusion(
    sources: Sequence[FeatureMatrix],
    manifest: Sequence[ItemRecord],
    models: Optional[Sequence[TemporalModel]] = None,
    placement: str = "low",
    plan: StackingPlan = StackingPlan(),
    cost: float = DEFAULT_COST,
    n_classes: Optional[int] = None,
    include_validation: bool = False,
    executor=None,
) -> FusionModel:
    """Train low-level models plus the stacked high-level model."""
    check_placement(placement)
    if not sources:
        raise ConfigError("need at least one feature source")
    items = training_items(manifest, include_validation)
    if not items:
        raise AlignmentError("no training items in manifest")
    labels = np.array([rec.label for rec in items], dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if placement != "none":
        if models is None:
            raise MissingModel(f"placement {placement!r} needs temporal models")
        check_model_coverage(models, n_classes)
    days = [rec.day for rec in items]

    counts = np.bincount(labels, minlength=n_classes)
    if counts.min() < plan.n_folds:
        raise ConfigError(
            f"n_folds {plan.n_folds} exceeds smallest class count {int(counts.min())}"
        )
    # Each stacking training subset must keep >= 2 examples per class for
    # the pair classifiers' own calibration split.
    worst_remaining = int(counts.min() - np.ceil(counts.min() / plan.n_folds))
    if worst_remaining < 2:
        raise ConfigError(
            f"stacking folds leave a class with {worst_remaining} training examples; "
            "need at least 2"
        )

    item_ids = [rec.item_id for rec in items]
    per_source = [_align_rows(source, item_ids) for source in sources]
    fold_ids = _stratified_fold_ids(labels, plan.n_folds, derive_seed(plan.seed, "stacking-folds"))

    low_models: list[MultiClassModel] = []
    blocks: list[np.ndarray] = []
    for source, X in zip(sources, per_source):
        name = source.source_name
        low_models.append(
            train_multiclass(
                X,
                labels,
                cost=cost,
                n_classes=n_classes,
                source_name=name,
                seed=derive_seed(plan.seed, f"low:{name}"),
                executor=executor,
            )
        )
        oof = np.empty((len(items), n_classes))
        for fold in range(plan.n_folds):
            held_out = fold_ids == fold
            fold_model = train_multiclass(
                X[~held_out],
                labels[~held_out],
                cost=cost,
                n_classes=n_classes,
                source_name=name,
                seed=derive_seed(plan.seed, f"stack:{name}:fold{fold}"),
                executor=executor,
            )
            oof[held_out] = predict_proba(fold_model, X[held_out])
        if placement in ("low", "both"):
            oof = refine_batch(oof, days, models)
        blocks.append(oof)

    stacked = np.hstack(blocks)
    high_model = train_multiclass(
        stacked,
        labels,
        cost=cost,
        n_classes=n_classes,
        source_name="stacked",
        seed=derive_seed(plan.seed, "high"),
        executor=executor,
    )
    return FusionModel(
        low_models=low_models,
        high_model=high_model,
        placement=placement,
        class_count=n_classes,
    )


def predict_fusion(
    fusion: FusionModel,
    sources: Sequence[FeatureMatrix],
    days: Sequence[Optional[int]],
    models: Optional[Sequence[TemporalModel]] = None,
    executor=None,
) -> np.ndarray:
    """Final class probabilities for the rows of the given sources."""
    if len(sources) != len(fusion.low_models):
        raise AlignmentError(
            f"{len(sources)} sources given, model has {len(fusion.low_models)}"
        )
    if fusion.placement != "none":
        if models is None:
            raise MissingModel(f"placement {fusion.placement!r} needs temporal models")
        check_model_coverage(models, fusion.class_count)

    item_ids = list(sources[0].row_ids)
    if len(days) != len(item_ids):
        raise DimensionError(f"{len(item_ids)} rows but {len(days)} days")

    blocks = []
    for source, low in zip(sources, fusion.low_models):
        X = _align_rows(source, item_ids)
        probs = predict_proba(low, X)
        if fusion.placement in ("low", "both"):
            probs = refine_batch(probs, days, models)
        blocks.append(probs)
    stacked = np.hstack(blocks)
    final = predict_proba(fusion.high_model, stacked)
    if fusion.placement in ("high", "both"):
        final = refine_batch(final, days, models)
    return final


# --- serialization ----------------------------------------------------------


def fusion_to_dict(fusion: FusionModel) -> dict:
    return {
        "placement": fusion.placement,
        "class_count": fusion.class_count,
        "source_names": [m.source_name for m in fusion.low_models],
        "low_models": [multiclass_to_dict(m) for m in fusion.low_models],
        "high_model": multiclass_to_dict(fusion.high_model),
    }


def fusion_from_dict(data: dict) -> FusionModel:
    return FusionModel(
        low_models=[multiclass_from_dict(d) for d in data["low_models"]],
        high_model=multiclass_from_dict(data["high_model"]),
        placement=check_placement(data["placement"]),
        class_count=int(data["class_count"]),
    )


def save_fusion(path, fusion: FusionModel, provenance: Optional[dict] = None) -> None:
    payload = fusion_to_dict(fusion)
    if provenance is not None:
        payload["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def load_fusion(path) -> FusionModel:
    with open(path, encoding="utf-8") as handle:
        return fusion_from_dict(json.loads(handle.read()))
