"""Temporal occurrence models, probability refinement, and classifier fusion
for recognizing recurring events from precomputed features and capture dates."""

from .augment import FilterDecision, filter_by_temporal
from .calibrate import SigmoidCalibrator, fit_sigmoid
from .classifier import (
    MultiClassModel,
    PairClassifier,
    predict_proba,
    train_multiclass,
)
from .coupling import couple_pairwise, couple_pairwise_batch
from .errors import EventFuseError
from .evaluation import EvalReport, PrCurve, average_precision, evaluate, pr_curve
from .fusion import (
    FusionModel,
    StackingPlan,
    predict_fusion,
    stacked_input_dim,
    train_fusion,
)
from .ingest import (
    FeatureMatrix,
    ItemRecord,
    day_of_year,
    load_feature_matrix,
    load_manifest,
    parse_manifest,
    serialize_manifest,
    write_feature_matrix,
)
from .refine import refine, refine_batch
from .spline import DEFAULT_SMOOTHING, SplineFit, fit_smoothing_spline
from .svm import BinarySvm, decision_values, train_binary_svm
from .synth import SynthConfig, SynthDataset, generate_synthetic
from .temporal import (
    TemporalModel,
    build_histogram,
    fit_temporal_model,
    score_vector,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySvm",
    "DEFAULT_SMOOTHING",
    "EvalReport",
    "EventFuseError",
    "FeatureMatrix",
    "FilterDecision",
    "FusionModel",
    "ItemRecord",
    "MultiClassModel",
    "PairClassifier",
    "PrCurve",
    "SigmoidCalibrator",
    "SplineFit",
    "StackingPlan",
    "SynthConfig",
    "SynthDataset",
    "TemporalModel",
    "average_precision",
    "build_histogram",
    "couple_pairwise",
    "couple_pairwise_batch",
    "day_of_year",
    "decision_values",
    "evaluate",
    "filter_by_temporal",
    "fit_sigmoid",
    "fit_smoothing_spline",
    "fit_temporal_model",
    "generate_synthetic",
    "load_feature_matrix",
    "load_manifest",
    "parse_manifest",
    "pr_curve",
    "predict_fusion",
    "predict_proba",
    "refine",
    "refine_batch",
    "score_vector",
    "serialize_manifest",
    "stacked_input_dim",
    "train_binary_svm",
    "train_fusion",
    "train_multiclass",
    "write_feature_matrix",
]
