"""One-vs-one multi-class linear classifier with probabilistic output.

One binary SVM per unordered class pair, each paired with a sigmoid
calibrator fitted on 3-fold out-of-fold decision values (in-sample
decisions on separable features collapse the sigmoid to a step).  At
prediction time the calibrated pairwise probabilities are coupled into a
single distribution per row.

Per-pair seeds are derived from the root seed and the pair's *row
indices*, not its class numbers, so renumbering classes permutes the
trained pairs instead of changing their arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeds import derive_seed, derive_seed_from_indices
from .calibrate import SigmoidCalibrator, fit_sigmoid
from .coupling import couple_pairwise_batch
from .errors import DimensionError, LabelOutOfRange, TooFewExamples
from .svm import DEFAULT_COST, BinarySvm, decision_values, train_binary_svm

_CALIBRATION_FOLDS = 3
_PAIRWISE_CLIP = 1e-7


@dataclass
class PairClassifier:
    """Binary SVM + calibrator for one unordered class pair (a < b);
    the positive sign belongs to class a."""

    class_a: int
    class_b: int
    svm: BinarySvm
    calibrator: SigmoidCalibrator


@dataclass
class MultiClassModel:
    n_classes: int
    feature_dim: int
    source_name: str
    l2_normalize: bool
    pairs: list[PairClassifier] = field(default_factory=list)
    seed: int = 0


def l2_normalize_rows(X: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; zero rows stay zero."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms == 0.0, 1.0, norms)


def _stratified_folds(signs: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Fold id per row: one label-blind shuffle, then round-robin per sign.

    A row's fold depends only on its position among same-signed rows in
    the shuffled order, so flipping every sign leaves the folds unchanged.
    """
    n = len(signs)
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    counters = {1.0: 0, -1.0: 0}
    for idx in order:
        sign = 1.0 if signs[idx] > 0 else -1.0
        folds[idx] = counters[sign] % n_folds
        counters[sign] += 1
    return folds


def _out_of_fold_decisions(
    X: np.ndarray, y: np.ndarray, cost: float, seed: int
) -> np.ndarray:
    folds = _stratified_folds(y, _CALIBRATION_FOLDS, derive_seed(seed, "calibration-folds"))
    decisions = np.empty(len(y))
    for fold in range(_CALIBRATION_FOLDS):
        held_out = folds == fold
        if not np.any(held_out):
            continue
        svm = train_binary_svm(
            X[~held_out], y[~held_out], cost=cost, seed=derive_seed(seed, f"fold{fold}")
        )
        decisions[held_out] = decision_values(svm, X[held_out])
    return decisions


def _train_pair(
    X: np.ndarray, y: np.ndarray, cost: float, seed: int
) -> tuple[BinarySvm, SigmoidCalibrator]:
    oof = _out_of_fold_decisions(X, y, cost, seed)
    calibrator = fit_sigmoid(oof, y)
    svm = train_binary_svm(X, y, cost=cost, seed=derive_seed(seed, "final"))
    return svm, calibrator


def train_multiclass(
    X: np.ndarray,
    labels,
    cost: float = DEFAULT_COST,
    l2_normalize: bool = False,
    n_classes: Optional[int] = None,
    source_name: str = "",
    seed: int = 0,
    executor=None,
) -> MultiClassModel:
    """Train all C*(C-1)/2 pair classifiers.

    Every class 0..C-1 needs at least 2 examples (the calibration split
    must keep both signs in each training fold).  Pass a
    concurrent.futures executor to train pairs in parallel.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise DimensionError(f"X {X.shape} does not align with labels {labels.shape}")
    if len(labels) and labels.min() < 0:
        raise LabelOutOfRange("labels must be non-negative class indices")
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if len(labels) else 0
    elif len(labels) and labels.max() >= n_classes:
        raise LabelOutOfRange(f"label {labels.max()} >= class count {n_classes}")
    if n_classes < 2:
        raise TooFewExamples("need at least two classes")
    counts = np.bincount(labels, minlength=n_classes)
    lacking = np.nonzero(counts < 2)[0]
    if len(lacking):
        raise TooFewExamples(f"classes {lacking.tolist()} have fewer than 2 examples")

    if l2_normalize:
        X = l2_normalize_rows(X)

    jobs = []
    for a in range(n_classes):
        for b in range(a + 1, n_classes):
            rows = np.nonzero((labels == a) | (labels == b))[0]
            pair_seed = derive_seed_from_indices(seed, rows)
            pair_x = X[rows]
            pair_y = np.where(labels[rows] == a, 1.0, -1.0)
            jobs.append((a, b, pair_x, pair_y, pair_seed))

    if executor is None:
        results = [_train_pair(px, py, cost, ps) for _, _, px, py, ps in jobs]
    else:
        futures = [executor.submit(_train_pair, px, py, cost, ps) for _, _, px, py, ps in jobs]
        results = [f.result() for f in futures]

    pairs = [
        PairClassifier(class_a=a, class_b=b, svm=svm, calibrator=cal)
        for (a, b, _, _, _), (svm, cal) in zip(jobs, results)
    ]
    return MultiClassModel(
        n_classes=n_classes,
        feature_dim=X.shape[1],
        source_name=source_name,
        l2_normalize=l2_normalize,
        pairs=pairs,
        seed=seed,
    )


def predict_proba(model: MultiClassModel, X: np.ndarray) -> np.ndarray:
    """Per-row class distribution via calibrated pairwise coupling."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise DimensionError(
            f"X {X.shape} does not match feature_dim {model.feature_dim}"
        )
    if model.l2_normalize:
        X = l2_normalize_rows(X)

    n, c = X.shape[0], model.n_classes
    r = np.zeros((n, c, c))
    for pair in model.pairs:
        f = decision_values(pair.svm, X)
        # Sigmoid tails can underflow to exact 0/1; clip into the open
        # interval the coupling step requires.
        p = np.clip(pair.calibrator.predict(f), _PAIRWISE_CLIP, 1.0 - _PAIRWISE_CLIP)
        r[:, pair.class_a, pair.class_b] = p
        r[:, pair.class_b, pair.class_a] = 1.0 - p
    return couple_pairwise_batch(r)


# --- serialization ----------------------------------------------------------


def multiclass_to_dict(model: MultiClassModel) -> dict:
    return {
        "n_classes": model.n_classes,
        "feature_dim": model.feature_dim,
        "source_name": model.source_name,
        "l2_normalize": model.l2_normalize,
        "seed": model.seed,
        "pairs": [
            {
                "a": pair.class_a,
                "b": pair.class_b,
                "weights": [float(v) for v in pair.svm.weights],
                "bias": pair.svm.bias,
                "A": pair.calibrator.A,
                "B": pair.calibrator.B,
            }
            for pair in model.pairs
        ],
    }


def multiclass_from_dict(data: dict, cost: float = DEFAULT_COST) -> MultiClassModel:
    pairs = [
        PairClassifier(
            class_a=int(obj["a"]),
            class_b=int(obj["b"]),
            svm=BinarySvm(
                weights=np.asarray(obj["weights"], dtype=np.float64),
                bias=float(obj["bias"]),
                cost=cost,
            ),
            calibrator=SigmoidCalibrator(A=float(obj["A"]), B=float(obj["B"])),
        )
        for obj in data["pairs"]
    ]
    return MultiClassModel(
        n_classes=int(data["n_classes"]),
        feature_dim=int(data["feature_dim"]),
        source_name=data["source_name"],
        l2_normalize=bool(data["l2_normalize"]),
        pairs=pairs,
        seed=int(data.get("seed", 0)),
    )


def save_multiclass(path, model: MultiClassModel, provenance: Optional[dict] = None) -> None:
    payload = multiclass_to_dict(model)
    if provenance is not None:
        payload["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def load_multiclass(path) -> MultiClassModel:
    with open(path, encoding="utf-8") as handle:
        return multiclass_from_dict(json.loads(handle.read()))
