"""Command-line interface.

Subcommands mirror the pipeline stages: synth, fit-temporal, train,
train-fusion, predict, refine, evaluate, filter-augment, and pipeline
(which chains fit-temporal -> train-fusion -> predict -> evaluate from a
single JSON config).  All randomness flows from --seed; identical inputs
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import augment, evaluation, fusion, ingest, refine, synth, temporal
from .classifier import load_multiclass, predict_proba, save_multiclass, train_multiclass
from .config import RunConfig, load_config
from .errors import AlignmentError, ConfigError, EventFuseError
from .spline import DEFAULT_SMOOTHING
from .svm import DEFAULT_COST


def _provenance(seed: int, args: dict) -> dict:
    canonical = json.dumps(args, sort_keys=True, separators=(",", ":"), default=str)
    return {
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest()[:16],
        "seed": seed,
    }


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _write_sidecar(path: Path, provenance: dict) -> None:
    _write_text(
        Path(str(path) + ".meta.json"),
        json.dumps(provenance, sort_keys=True, separators=(",", ":")) + "\n",
    )


# --- probability CSV ---------------------------------------------------------


def probs_to_csv(item_ids: Sequence[str], probs: np.ndarray) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["item_id"] + [f"c{c}" for c in range(probs.shape[1])])
    for item_id, row in zip(item_ids, probs):
        writer.writerow([item_id] + [repr(float(v)) for v in row])
    return buffer.getvalue()


def read_probs_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if not header or header[0] != "item_id":
            raise ConfigError([f"{path}: probability CSV must start with item_id column"])
        n_cols = len(header) - 1
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return ids, np.asarray(rows, dtype=float).reshape(len(ids), n_cols)


# --- shared helpers ----------------------------------------------------------


def _make_executor(threads: int):
    if threads == 1:
        return None
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers <= 1:
        return None
    return concurrent.futures.ThreadPoolExecutor(max_workers=workers)


def _fit_all_temporal(
    records: Sequence[ingest.ItemRecord],
    n_classes: int,
    smoothing: float,
    pad: int,
) -> list[temporal.TemporalModel]:
    """One model per class from dated, labeled train/validation items."""
    days_by_class: dict[int, list[int]] = {c: [] for c in range(n_classes)}
    for rec in records:
        if rec.split == "test" or rec.label is None or rec.day is None:
            continue
        days_by_class[rec.label].append(rec.day)
    return [
        temporal.fit_temporal_model(days_by_class[c], class_id=c, p=smoothing, pad=pad)
        for c in range(n_classes)
    ]


def _select_items(
    records: Sequence[ingest.ItemRecord], split: str
) -> list[ingest.ItemRecord]:
    if split == "all":
        return list(records)
    return [rec for rec in records if rec.split == split]


def _sources_for_items(
    feature_paths: Sequence[Path], item_ids: Sequence[str]
) -> list[ingest.FeatureMatrix]:
    """Load sources and restrict each to the given items, in order."""
    sources = []
    for path in feature_paths:
        matrix = ingest.load_feature_matrix(path)
        index = matrix.index_of()
        missing = [i for i in item_ids if i not in index]
        if missing:
            raise AlignmentError(
                f"{path}: missing {len(missing)} item ids (first: {missing[0]!r})"
            )
        rows = [index[i] for i in item_ids]
        sources.append(
            ingest.FeatureMatrix(
                source_name=matrix.source_name,
                values=matrix.values[rows],
                row_ids=list(item_ids),
            )
        )
    return sources


# --- subcommands -------------------------------------------------------------


def cmd_synth(args) -> int:
    windows = _default_windows(args.classes)
    pairs = tuple(
        (2 * k, 2 * k + 1) for k in range(args.confusable_pairs)
    )
    config = synth.SynthConfig(
        n_classes=args.classes,
        per_class_train=args.per_class_train,
        per_class_test=args.per_class_test,
        feature_dim=args.feature_dim,
        feature_noise=args.feature_noise,
        date_windows=windows,
        timestamp_coverage=args.coverage,
        confusable_pairs=pairs,
        n_sources=args.sources,
    )
    dataset = synth.generate_synthetic(config, seed=args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ingest.save_manifest(out_dir / "manifest.jsonl", dataset.records)
    for matrix in dataset.sources:
        ingest.write_feature_matrix(out_dir / f"{matrix.source_name}.fmat", matrix)

    run_config = {
        "manifest": "manifest.jsonl",
        "features": [f"{m.source_name}.fmat" for m in dataset.sources],
        "class_count": args.classes,
        "out_dir": "run",
        "placement": args.placement,
        "folds": args.folds,
        "seed": args.seed,
    }
    _write_text(
        out_dir / "run_config.json",
        json.dumps(run_config, sort_keys=True, separators=(",", ":")) + "\n",
    )
    if not args.quiet:
        print(f"wrote dataset ({len(dataset.records)} items) to {out_dir}")
    return 0


def _default_windows(n_classes: int) -> tuple:
    """Disjoint day-of-year windows spread over the year."""
    span = 365 // n_classes
    width = max(5, span // 2)
    return tuple(
        (1 + c * span, min(1 + c * span + width, 365)) for c in range(n_classes)
    )


def cmd_fit_temporal(args) -> int:
    records = ingest.load_manifest(args.manifest, n_classes=args.classes)
    models = _fit_all_temporal(records, args.classes, args.smoothing, args.pad)
    provenance = _provenance(
        args.seed,
        {
            "cmd": "fit-temporal",
            "manifest": args.manifest,
            "classes": args.classes,
            "smoothing": args.smoothing,
            "pad": args.pad,
        },
    )
    temporal.save_models(Path(args.out), models, provenance=provenance)
    if not args.quiet:
        print(f"fit {len(models)} temporal models -> {args.out}")
    return 0


def cmd_train(args) -> int:
    records = ingest.load_manifest(args.manifest, n_classes=args.classes)
    items = fusion.training_items(records, include_validation=args.include_validation)
    (source,) = _sources_for_items([Path(args.features)], [rec.item_id for rec in items])
    labels = [rec.label for rec in items]
    executor = _make_executor(args.threads)
    try:
        model = train_multiclass(
            source.values,
            labels,
            cost=args.cost,
            l2_normalize=args.l2_normalize,
            n_classes=args.classes,
            source_name=source.source_name,
            seed=args.seed,
            executor=executor,
        )
    finally:
        if executor is not None:
            executor.shutdown()
    provenance = _provenance(
        args.seed,
        {
            "cmd": "train",
            "manifest": args.manifest,
            "features": args.features,
            "cost": args.cost,
            "l2_normalize": args.l2_normalize,
            "classes": args.classes,
        },
    )
    save_multiclass(Path(args.out), model, provenance=provenance)
    if not args.quiet:
        print(f"trained {model.source_name or 'model'} ({len(model.pairs)} pairs) -> {args.out}")
    return 0


def cmd_train_fusion(args) -> int:
    records = ingest.load_manifest(args.manifest, n_classes=args.classes)
    items = fusion.training_items(records, include_validation=args.include_validation)
    item_ids = [rec.item_id for rec in items]
    sources = _sources_for_items([Path(p) for p in args.features], item_ids)
    models = temporal.load_models(args.models) if args.models else None
    executor = _make_executor(args.threads)
    try:
        fused = fusion.train_fusion(
            sources,
            items,
            models=models,
            placement=args.placement,
            plan=fusion.StackingPlan(n_folds=args.folds, seed=args.seed),
            cost=args.cost,
            n_classes=args.classes,
            executor=executor,
        )
    finally:
        if executor is not None:
            executor.shutdown()
    provenance = _provenance(
        args.seed,
        {
            "cmd": "train-fusion",
            "manifest": args.manifest,
            "features": list(args.features),
            "placement": args.placement,
            "folds": args.folds,
            "cost": args.cost,
            "classes": args.classes,
        },
    )
    fusion.save_fusion(Path(args.out), fused, provenance=provenance)
    if not args.quiet:
        print(f"trained fusion over {len(sources)} sources -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    fused = fusion.load_fusion(args.fusion)
    records = ingest.load_manifest(args.manifest)
    items = _select_items(records, args.split)
    if not items:
        raise AlignmentError(f"no items in split {args.split!r}")
    item_ids = [rec.item_id for rec in items]
    sources = _sources_for_items([Path(p) for p in args.features], item_ids)
    models = temporal.load_models(args.models) if args.models else None
    days = [rec.day for rec in items]
    probs = fusion.predict_fusion(fused, sources, days, models=models)
    provenance = _provenance(
        0,
        {
            "cmd": "predict",
            "fusion": args.fusion,
            "manifest": args.manifest,
            "features": list(args.features),
            "split": args.split,
        },
    )
    _write_text(Path(args.out), probs_to_csv(item_ids, probs))
    _write_sidecar(Path(args.out), provenance)
    if not args.quiet:
        print(f"predicted {probs.shape[0]} rows x {probs.shape[1]} classes -> {args.out}")
    return 0


def cmd_refine(args) -> int:
    item_ids, probs = read_probs_csv(args.probs)
    records = ingest.load_manifest(args.manifest)
    by_id = {rec.item_id: rec for rec in records}
    missing = [i for i in item_ids if i not in by_id]
    if missing:
        raise AlignmentError(f"manifest lacks {len(missing)} probability rows")
    days = [by_id[i].day for i in item_ids]
    models = temporal.load_models(args.models)
    refined = refine.refine_batch(probs, days, models)
    provenance = _provenance(
        0,
        {"cmd": "refine", "probs": args.probs, "manifest": args.manifest, "models": args.models},
    )
    _write_text(Path(args.out), probs_to_csv(item_ids, refined))
    _write_sidecar(Path(args.out), provenance)
    if not args.quiet:
        changed = int(np.sum(np.any(refined != probs, axis=1)))
        print(f"refined {changed}/{len(item_ids)} dated rows -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    item_ids, probs = read_probs_csv(args.probs)
    records = ingest.load_manifest(args.manifest)
    by_id = {rec.item_id: rec for rec in records}
    labels = []
    for item_id in item_ids:
        rec = by_id.get(item_id)
        if rec is None or rec.label is None:
            raise AlignmentError(f"item {item_id!r} has no label in the manifest")
        labels.append(rec.label)
    report = evaluation.evaluate(probs, labels, convention=args.ap)
    provenance = _provenance(
        0, {"cmd": "evaluate", "probs": args.probs, "manifest": args.manifest, "ap": args.ap}
    )
    evaluation.save_report(Path(args.out), report, provenance=provenance)
    if args.curves:
        curves_dir = Path(args.curves)
        curves_dir.mkdir(parents=True, exist_ok=True)
        labels_arr = np.asarray(labels)
        for c in range(report.n_classes):
            curve = evaluation.pr_curve(probs[:, c], labels_arr == c)
            _write_text(curves_dir / f"class_{c}.csv", curve.to_csv())
    print(f"map {report.mean_ap!r}")
    return 0


def cmd_filter_augment(args) -> int:
    records = ingest.load_manifest(args.manifest)
    class_map: dict[str, int] = {}
    with open(args.class_map, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[:2] != ["item_id", "class_id"]:
            raise ConfigError([f"{args.class_map}: header must be item_id,class_id"])
        for row in reader:
            class_map[row[0]] = int(row[1])
    items = [rec for rec in records if rec.item_id in class_map]
    class_ids = [class_map[rec.item_id] for rec in items]
    models = temporal.load_models(args.models)
    decisions = augment.filter_by_temporal(items, class_ids, models, args.threshold)
    provenance = _provenance(
        0,
        {
            "cmd": "filter-augment",
            "manifest": args.manifest,
            "class_map": args.class_map,
            "threshold": args.threshold,
        },
    )
    _write_text(Path(args.out), augment.decisions_to_csv(decisions))
    _write_sidecar(Path(args.out), provenance)
    kept = sum(d.kept for d in decisions)
    if not args.quiet:
        print(f"kept {kept}/{len(decisions)} items at threshold {args.threshold} -> {args.out}")
    return 0


# --- pipeline ----------------------------------------------------------------


class _StageFailure(EventFuseError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def run_pipeline(config: RunConfig, threads: int = 1, quiet: bool = False) -> float:
    """fit-temporal -> train-fusion -> predict -> evaluate; returns mAP.

    Artifacts land in config.out_dir; a stage failure renames that stage's
    finished outputs to '<name>.partial' and re-raises with the stage name.
    """
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = config.provenance()
    records = ingest.load_manifest(config.manifest, n_classes=config.class_count)

    models_path = out_dir / "models.json"
    fusion_path = out_dir / "fusion.json"
    probs_path = out_dir / "probs.csv"
    report_path = out_dir / "report.json"

    def run_stage(name, outputs, fn):
        try:
            return fn()
        except Exception as exc:
            for path in outputs:
                if path.exists():
                    path.rename(Path(str(path) + ".partial"))
            raise _StageFailure(name, exc) from exc

    def stage_temporal():
        models = None
        if config.placement != "none":
            models = _fit_all_temporal(
                records, config.class_count, config.smoothing, config.pad
            )
            temporal.save_models(models_path, models, provenance=provenance)
        return models

    models = run_stage("fit-temporal", [models_path], stage_temporal)

    def stage_fusion():
        items = fusion.training_items(records, config.include_validation)
        item_ids = [rec.item_id for rec in items]
        sources = _sources_for_items(config.features, item_ids)
        executor = _make_executor(threads)
        try:
            fused = fusion.train_fusion(
                sources,
                items,
                models=models,
                placement=config.placement,
                plan=fusion.StackingPlan(n_folds=config.folds, seed=config.seed),
                cost=config.cost,
                n_classes=config.class_count,
                executor=executor,
            )
        finally:
            if executor is not None:
                executor.shutdown()
        fusion.save_fusion(fusion_path, fused, provenance=provenance)
        return fused

    fused = run_stage("train-fusion", [fusion_path], stage_fusion)

    def stage_predict():
        items = _select_items(records, "test")
        if not items:
            raise AlignmentError("manifest has no test items")
        item_ids = [rec.item_id for rec in items]
        sources = _sources_for_items(config.features, item_ids)
        days = [rec.day for rec in items]
        probs = fusion.predict_fusion(fused, sources, days, models=models)
        _write_text(probs_path, probs_to_csv(item_ids, probs))
        _write_sidecar(probs_path, provenance)
        return items, probs

    items, probs = run_stage("predict", [probs_path], stage_predict)

    def stage_evaluate():
        labels = []
        for rec in items:
            if rec.label is None:
                raise AlignmentError(f"test item {rec.item_id!r} has no label")
            labels.append(rec.label)
        report = evaluation.evaluate(probs, labels, convention=config.ap)
        evaluation.save_report(report_path, report, provenance=provenance)
        return report

    report = run_stage("evaluate", [report_path], stage_evaluate)
    print(f"map {report.mean_ap!r}")
    if not quiet:
        print(f"artifacts in {out_dir}")
    return report.mean_ap


def cmd_pipeline(args) -> int:
    overrides = {
        "placement": args.placement,
        "folds": args.folds,
        "seed": args.pipeline_seed,
        "cost": args.cost,
        "smoothing": args.smoothing,
        "pad": args.pad,
        "ap": args.ap,
        # Command-line paths are relative to the working directory, not the
        # config file like in-config paths are.
        "out_dir": None if args.out_dir is None else os.path.abspath(args.out_dir),
    }
    config = load_config(args.config, overrides=overrides)
    run_pipeline(config, threads=args.threads, quiet=args.quiet)
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventfuse",
        description="Temporal models, probability refinement, and classifier fusion "
        "for recurring-event recognition.",
    )
    parser.add_argument("--seed", type=int, default=0, help="root random seed")
    parser.add_argument(
        "--threads", type=int, default=1, help="worker threads for pair training (0 = auto)"
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--per-class-train", type=int, default=30)
    p.add_argument("--per-class-test", type=int, default=30)
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--feature-noise", type=float, default=0.3)
    p.add_argument("--coverage", type=float, default=1.0)
    p.add_argument("--confusable-pairs", type=int, default=0, help="number of class pairs sharing visual means")
    p.add_argument("--sources", type=int, default=2)
    p.add_argument("--placement", default="low", help="placement written into run_config.json")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("fit-temporal", help="fit per-class temporal models")
    p.add_argument("--manifest", required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smoothing", type=float, default=DEFAULT_SMOOTHING)
    p.add_argument("--pad", type=int, default=temporal.DEFAULT_PAD)
    p.set_defaults(fn=cmd_fit_temporal)

    p = sub.add_parser("train", help="train one multi-class model on one source")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--cost", type=float, default=DEFAULT_COST)
    p.add_argument("--l2-normalize", action="store_true")
    p.add_argument("--include-validation", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("train-fusion", help="train the two-level fusion hierarchy")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--models", default=None, help="temporal models JSON")
    p.add_argument("--placement", default="low", choices=fusion.PLACEMENTS)
    p.add_argument("--folds", type=int, default=fusion.DEFAULT_FOLDS)
    p.add_argument("--cost", type=float, default=DEFAULT_COST)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--include-validation", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_fusion)

    p = sub.add_parser("predict", help="predict class probabilities with a fusion model")
    p.add_argument("--fusion", required=True)
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--models", default=None, help="temporal models JSON")
    p.add_argument("--split", default="test", choices=("train", "validation", "test", "all"))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("refine", help="temporally refine a probability CSV")
    p.add_argument("--probs", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_refine)

    p = sub.add_parser("evaluate", help="mean average precision of a probability CSV")
    p.add_argument("--probs", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ap", default="step", choices=evaluation.AP_CONVENTIONS)
    p.add_argument("--curves", default=None, help="directory for per-class PR curve CSVs")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("filter-augment", help="filter collected items by temporal score")
    p.add_argument("--manifest", required=True)
    p.add_argument("--class-map", required=True, help="CSV of item_id,class_id")
    p.add_argument("--models", required=True)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_filter_augment)

    p = sub.add_parser("pipeline", help="run all stages from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--placement", default=None, choices=fusion.PLACEMENTS)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--seed", dest="pipeline_seed", type=int, default=None)
    p.add_argument("--cost", type=float, default=None)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--pad", type=int, default=None)
    p.add_argument("--ap", default=None, choices=evaluation.AP_CONVENTIONS)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_pipeline)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EventFuseError as exc:
        if isinstance(exc, ConfigError):
            for problem in exc.problems:
                print(f"config error: {problem}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
