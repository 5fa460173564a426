"""Two-level fusion: stacking structure, refinement placement, alignment."""

import numpy as np
import pytest

from eventfuse.errors import AlignmentError, ConfigError, MissingModel
from eventfuse.fusion import (
    StackingPlan,
    fusion_from_dict,
    fusion_to_dict,
    predict_fusion,
    stacked_input_dim,
    train_fusion,
)
from eventfuse.synth import SynthConfig, generate_synthetic
from eventfuse.temporal import fit_temporal_model


def synth_setup(n_sources=2, n_classes=3, coverage=1.0, seed=0, per_train=15, per_test=8):
    windows = tuple((1 + 120 * c, 40 + 120 * c) for c in range(n_classes))
    config = SynthConfig(
        n_classes=n_classes,
        per_class_train=per_train,
        per_class_test=per_test,
        feature_dim=6,
        feature_noise=0.4,
        date_windows=windows,
        timestamp_coverage=coverage,
        confusable_pairs=((0, 1),),
        n_sources=n_sources,
    )
    dataset = generate_synthetic(config, seed=seed)
    train = [r for r in dataset.records if r.split == "train"]
    test = [r for r in dataset.records if r.split == "test"]
    test_ids = [r.item_id for r in test]
    test_sources = [
        type(s)(s.source_name, s.values[[s.index_of()[i] for i in test_ids]], list(test_ids))
        for s in dataset.sources
    ]
    models = []
    for c in range(n_classes):
        days = [r.day for r in train if r.label == c and r.day is not None]
        if not days:
            # undated dataset: build the class model from its window instead
            days = list(range(windows[c][0], windows[c][1] + 1))
        models.append(fit_temporal_model(days, class_id=c))
    return dataset, train, test, test_sources, models


class TestTrainFusion:
    def test_single_source_degenerate_structure(self):
        dataset, train, test, test_sources, _ = synth_setup(n_sources=1)
        fused = train_fusion(
            dataset.sources[:1], dataset.records, placement="none",
            plan=StackingPlan(n_folds=3, seed=1),
        )
        assert fused.high_model.feature_dim == fused.class_count == 3
        assert len(fused.low_models) == 1

    def test_stacked_input_dim_rule(self):
        # the original setup: three layers from each of two networks, 50 events
        assert stacked_input_dim(6, 50) == 300
        assert stacked_input_dim(1, 3) == 3

    def test_high_dim_matches_sources_times_classes(self):
        dataset, *_ = synth_setup(n_sources=2)
        fused = train_fusion(
            dataset.sources, dataset.records, placement="none",
            plan=StackingPlan(n_folds=3, seed=1),
        )
        assert fused.high_model.feature_dim == stacked_input_dim(2, 3) == 6

    def test_all_timestamps_absent_low_equals_none(self):
        dataset, train, test, test_sources, models = synth_setup(coverage=0.0)
        plan = StackingPlan(n_folds=3, seed=2)
        fused_none = train_fusion(dataset.sources, dataset.records, placement="none", plan=plan)
        fused_low = train_fusion(
            dataset.sources, dataset.records, models=models, placement="low", plan=plan
        )
        a = fusion_to_dict(fused_none)
        b = fusion_to_dict(fused_low)
        a.pop("placement"), b.pop("placement")
        assert a == b

    def test_placement_needs_models(self):
        dataset, *_ = synth_setup()
        with pytest.raises(MissingModel):
            train_fusion(dataset.sources, dataset.records, placement="low",
                         plan=StackingPlan(n_folds=3, seed=0))

    def test_misaligned_sources(self):
        dataset, *_ = synth_setup()
        # drop the first row, which belongs to the training split
        crippled = type(dataset.sources[0])(
            "src0", dataset.sources[0].values[1:], dataset.sources[0].row_ids[1:]
        )
        with pytest.raises(AlignmentError):
            train_fusion([crippled], dataset.records, placement="none",
                         plan=StackingPlan(n_folds=3, seed=0))

    def test_too_many_folds(self):
        dataset, *_ = synth_setup(per_train=4)
        with pytest.raises(ConfigError):
            train_fusion(dataset.sources, dataset.records, placement="none",
                         plan=StackingPlan(n_folds=5, seed=0))

    def test_invalid_placement(self):
        dataset, *_ = synth_setup()
        with pytest.raises(ConfigError):
            train_fusion(dataset.sources, dataset.records, placement="sideways",
                         plan=StackingPlan(n_folds=3, seed=0))

    def test_stacking_blocks_are_probability_blocks(self):
        # with placement none each out-of-fold block row sums to 1; verify
        # through the degenerate one-source case where the high model sees
        # exactly one block
        dataset, *_ = synth_setup(n_sources=1)
        fused = train_fusion(dataset.sources[:1], dataset.records, placement="none",
                             plan=StackingPlan(n_folds=3, seed=3))
        assert fused.high_model.feature_dim == 3


class TestPredictFusion:
    def test_placement_none_ignores_days(self):
        dataset, train, test, test_sources, models = synth_setup()
        fused = train_fusion(dataset.sources, dataset.records, placement="none",
                             plan=StackingPlan(n_folds=3, seed=4))
        days = [r.day for r in test]
        a = predict_fusion(fused, test_sources, days)
        b = predict_fusion(fused, test_sources, [None] * len(test))
        np.testing.assert_array_equal(a, b)

    def test_placement_high_absent_day_rows_match_none(self):
        dataset, train, test, test_sources, models = synth_setup()
        plan = StackingPlan(n_folds=3, seed=5)
        fused_none = train_fusion(dataset.sources, dataset.records, placement="none", plan=plan)
        fused_high = train_fusion(dataset.sources, dataset.records, models=models,
                                  placement="high", plan=plan)
        days = [None] * len(test)
        a = predict_fusion(fused_none, test_sources, days)
        b = predict_fusion(fused_high, test_sources, days, models=models)
        # high-placement training is identical to none (refinement only at
        # predict time), so undated rows coincide exactly
        np.testing.assert_array_equal(a, b)

    def test_low_placement_flips_contradicted_argmax(self):
        # a class-0 item that visually looks like the confusable class 1,
        # captured on a day only class 0's temporal window explains
        from eventfuse.ingest import FeatureMatrix

        dim = 16
        config = SynthConfig(
            n_classes=3, per_class_train=30, per_class_test=5, feature_dim=dim,
            feature_noise=0.3, date_windows=((10, 30), (180, 200), (320, 340)),
            timestamp_coverage=1.0, confusable_pairs=((0, 1),), n_sources=1,
        )
        dataset = generate_synthetic(config, seed=5)
        models = [
            fit_temporal_model(list(range(w[0], w[1] + 1)), class_id=c)
            for c, w in enumerate(config.date_windows)
        ]
        fused = train_fusion(dataset.sources, dataset.records, models=models,
                             placement="low", plan=StackingPlan(n_folds=5, seed=5))

        # rebuild the generator's class means (same seed, same draw order)
        rng = np.random.default_rng(5)
        v = rng.normal(size=dim)
        mean0 = v / np.linalg.norm(v)
        offset = rng.normal(size=dim)
        offset /= np.linalg.norm(offset)
        mean1 = mean0 + 0.5 * 0.3 * np.sqrt(dim) * offset

        probe_x = (0.1 * mean0 + 0.9 * mean1).astype(np.float32)[None]
        probe = FeatureMatrix("src0", probe_x, ["probe"])
        plain = predict_fusion(fused, [probe], [None], models=models)[0]
        refined = predict_fusion(fused, [probe], [20], models=models)[0]
        assert plain.argmax() == 1          # visually fooled
        assert refined.argmax() == 0        # date flips it back

    def test_source_count_mismatch(self):
        dataset, train, test, test_sources, models = synth_setup()
        fused = train_fusion(dataset.sources, dataset.records, placement="none",
                             plan=StackingPlan(n_folds=3, seed=7))
        with pytest.raises(AlignmentError):
            predict_fusion(fused, test_sources[:1], [None] * len(test))


class TestSourceOrder:
    def test_source_permutation_consistent(self):
        dataset, train, test, test_sources, models = synth_setup(n_sources=2)
        plan = StackingPlan(n_folds=3, seed=8)
        fused_ab = train_fusion(dataset.sources, dataset.records, placement="none", plan=plan)
        fused_ba = train_fusion(dataset.sources[::-1], dataset.records, placement="none", plan=plan)
        days = [None] * len(test)
        a = predict_fusion(fused_ab, test_sources, days)
        b = predict_fusion(fused_ba, test_sources[::-1], days)
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_single_source_fusion_tracks_low_level_argmax(self):
        from eventfuse.classifier import predict_proba
        from eventfuse.ingest import FeatureMatrix

        config = SynthConfig(
            n_classes=3, per_class_train=15, per_class_test=10, feature_dim=6,
            feature_noise=0.35, date_windows=((1, 40), (121, 160), (241, 280)),
            timestamp_coverage=1.0, confusable_pairs=(), n_sources=1,
        )
        dataset = generate_synthetic(config, seed=9)
        test = [r for r in dataset.records if r.split == "test"]
        ids = [r.item_id for r in test]
        src = dataset.sources[0]
        rows = [src.index_of()[i] for i in ids]
        test_src = FeatureMatrix(src.source_name, src.values[rows], ids)
        fused = train_fusion([src], dataset.records, placement="none",
                             plan=StackingPlan(n_folds=3, seed=9))
        final = predict_fusion(fused, [test_src], [None] * len(test))
        low = predict_proba(fused.low_models[0], test_src.values.astype(float))
        agreement = np.mean(final.argmax(1) == low.argmax(1))
        assert agreement >= 0.95


class TestSerialization:
    def test_roundtrip(self):
        dataset, train, test, test_sources, models = synth_setup()
        fused = train_fusion(dataset.sources, dataset.records, models=models,
                             placement="both", plan=StackingPlan(n_folds=3, seed=10))
        clone = fusion_from_dict(fusion_to_dict(fused))
        days = [r.day for r in test]
        np.testing.assert_array_equal(
            predict_fusion(clone, test_sources, days, models=models),
            predict_fusion(fused, test_sources, days, models=models),
        )
