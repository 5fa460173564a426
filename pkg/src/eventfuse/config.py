"""Declarative run configuration for the end-to-end pipeline.

A run is a single JSON document naming the dataset, the feature sources,
the output paths, and the hyperparameters.  Validation reports every
problem at once rather than stopping at the first.  The canonical hash of
the resolved config is embedded in all run artifacts for provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .evaluation import AP_CONVENTIONS
from .fusion import DEFAULT_FOLDS, PLACEMENTS
from .spline import DEFAULT_SMOOTHING
from .svm import DEFAULT_COST
from .temporal import DEFAULT_PAD

_REQUIRED = ("manifest", "features", "class_count")


@dataclass
class RunConfig:
    manifest: Path
    features: list[Path]
    class_count: int
    out_dir: Path
    cost: float = DEFAULT_COST
    smoothing: float = DEFAULT_SMOOTHING
    pad: int = DEFAULT_PAD
    placement: str = "low"
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    ap: str = "step"
    threshold: float = 0.9
    include_validation: bool = False

    def resolved_dict(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "features": [str(f) for f in self.features],
            "class_count": self.class_count,
            "out_dir": str(self.out_dir),
            "cost": self.cost,
            "smoothing": self.smoothing,
            "pad": self.pad,
            "placement": self.placement,
            "folds": self.folds,
            "seed": self.seed,
            "ap": self.ap,
            "threshold": self.threshold,
            "include_validation": self.include_validation,
        }

    def config_hash(self) -> str:
        # out_dir is excluded: where artifacts land must not change their bytes.
        hashed = {k: v for k, v in self.resolved_dict().items() if k != "out_dir"}
        canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"config_hash": self.config_hash(), "seed": self.seed}


def validate_config(
    data: dict, base_dir: Optional[Path] = None, overrides: Optional[dict] = None
) -> RunConfig:
    """Build a RunConfig, collecting every problem into one ConfigError."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a JSON object"])
    merged = dict(data)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    base = Path(base_dir) if base_dir is not None else Path(".")

    for key in _REQUIRED:
        if key not in merged:
            problems.append(f"{key}: missing required field")

    def path_of(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    manifest = None
    if "manifest" in merged:
        manifest = path_of(merged["manifest"])
        if not manifest.is_file():
            problems.append(f"manifest: no such file {merged['manifest']!r}")

    features: list[Path] = []
    raw_features = merged.get("features")
    if raw_features is not None:
        if not isinstance(raw_features, list) or not raw_features:
            problems.append("features: must be a non-empty list of paths")
        else:
            for value in raw_features:
                p = path_of(value)
                features.append(p)
                if not p.is_file():
                    problems.append(f"features: no such file {value!r}")

    class_count = merged.get("class_count")
    if class_count is not None and (not isinstance(class_count, int) or class_count < 2):
        problems.append(f"class_count: must be an integer >= 2, got {class_count!r}")

    def number(key, default, low=None, high=None, integer=False):
        value = merged.get(key, default)
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        ok = ok and not isinstance(value, bool)
        if not ok:
            problems.append(f"{key}: expected a number, got {value!r}")
            return default
        if low is not None and value < low or high is not None and value > high:
            problems.append(f"{key}: {value} outside [{low}, {high}]")
            return default
        return value

    cost = number("cost", DEFAULT_COST, low=1e-12)
    smoothing = number("smoothing", DEFAULT_SMOOTHING)
    if not 0.0 < smoothing <= 1.0:
        problems.append(f"smoothing: {smoothing} outside (0, 1]")
        smoothing = DEFAULT_SMOOTHING
    pad = number("pad", DEFAULT_PAD, low=0, integer=True)
    folds = number("folds", DEFAULT_FOLDS, low=2, integer=True)
    seed = number("seed", 0, integer=True)
    threshold = number("threshold", 0.9, low=0.0, high=1.0)

    placement = merged.get("placement", "low")
    if placement not in PLACEMENTS:
        problems.append(f"placement: {placement!r} not one of {PLACEMENTS}")
        placement = "low"
    ap = merged.get("ap", "step")
    if ap not in AP_CONVENTIONS:
        problems.append(f"ap: {ap!r} not one of {AP_CONVENTIONS}")
        ap = "step"
    include_validation = merged.get("include_validation", False)
    if not isinstance(include_validation, bool):
        problems.append(f"include_validation: expected a boolean, got {include_validation!r}")
        include_validation = False

    out_dir = path_of(merged.get("out_dir", "."))

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        manifest=manifest,
        features=features,
        class_count=class_count,
        out_dir=out_dir,
        cost=float(cost),
        smoothing=float(smoothing),
        pad=int(pad),
        placement=placement,
        folds=int(folds),
        seed=int(seed),
        ap=ap,
        threshold=float(threshold),
        include_validation=include_validation,
    )


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc.msg}"]) from exc
    return validate_config(data, base_dir=path.parent, overrides=overrides)
