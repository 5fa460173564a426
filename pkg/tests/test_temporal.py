"""Temporal model pipeline: histogram, fit, normalization, scoring."""

import numpy as np
import pytest

from eventfuse.errors import MissingModel, NoTimestamps
from eventfuse.temporal import (
    TemporalModel,
    build_histogram,
    fit_temporal_model,
    models_from_json,
    models_to_json,
    score_vector,
)


class TestHistogram:
    def test_counting(self):
        counts = build_histogram([19, 19, 19])
        assert counts[18] == 3
        assert counts.sum() == 3

    def test_empty(self):
        counts = build_histogram([])
        assert counts.shape == (365,)
        assert counts.sum() == 0

    def test_boundary_bins(self):
        counts = build_histogram([1, 365])
        assert counts[0] == 1 and counts[364] == 1

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            build_histogram([0])
        with pytest.raises(ValueError):
            build_histogram([366])


class TestFitTemporalModel:
    def test_single_spike_peaks_at_its_day(self):
        # e.g. an event that always happens on day 19
        model = fit_temporal_model([19] * 40, class_id=0)
        assert int(np.argmax(model.scores)) == 18
        assert model.scores[18] == 1.0
        assert model.n_samples == 40

    def test_single_timestamp_allowed(self):
        model = fit_temporal_model([100])
        assert int(np.argmax(model.scores)) + 1 == 100
        assert model.scores.max() == 1.0

    def test_window_mass_stays_near_window(self):
        # ~month-long event spanning days 46..74
        rng = np.random.default_rng(12)
        days = rng.integers(46, 75, size=500).tolist()
        model = fit_temporal_model(days)
        above_half = np.nonzero(model.scores > 0.5)[0] + 1
        assert above_half.min() >= 36
        assert above_half.max() <= 84
        assert model.score(180) < 0.1

    def test_empty_raises(self):
        with pytest.raises(NoTimestamps):
            fit_temporal_model([])

    def test_scores_bounded_and_peak_normalized(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            count = int(rng.integers(1, 60))
            days = rng.integers(1, 366, size=count).tolist()
            model = fit_temporal_model(days)
            assert model.scores.min() >= 0.0
            assert model.scores.max() == 1.0
            assert model.scores.shape == (365,)

    def test_shift_equivariance_away_from_boundaries(self):
        rng = np.random.default_rng(8)
        base = np.clip(np.rint(rng.normal(120, 6, 300)), 80, 160).astype(int)
        reference = int(np.argmax(fit_temporal_model(base.tolist()).scores))
        for shift in (17, 60, 120):
            shifted = fit_temporal_model((base + shift).tolist())
            assert int(np.argmax(shifted.scores)) == reference + shift

    def test_circular_continuity_across_year_boundary(self):
        rng = np.random.default_rng(21)
        # mass straddling Dec 31 / Jan 1
        days = (((np.rint(rng.normal(0, 4, 400)).astype(int)) % 365) + 1).tolist()
        model = fit_temporal_model(days)
        assert abs(model.scores[0] - model.scores[364]) <= 0.2
        assert max(model.scores[0], model.scores[364]) > 0.5

    def test_determinism(self):
        days = [5, 5, 9, 200, 201, 202, 364]
        a = fit_temporal_model(days)
        b = fit_temporal_model(days)
        assert a.scores.tobytes() == b.scores.tobytes()


class TestScoring:
    def test_score_is_pure_lookup(self):
        model = fit_temporal_model([19] * 10)
        assert model.score(19) == 1.0
        assert model.score(1) == model.scores[0]

    def test_score_vector_composition(self):
        spike_a = fit_temporal_model([50] * 30, class_id=0)
        spike_b = fit_temporal_model([300] * 30, class_id=1)
        scores = score_vector([spike_a, spike_b], 50)
        assert scores[0] == 1.0
        assert scores[1] < 0.05

    def test_score_vector_identical_models(self):
        model = fit_temporal_model([100] * 5, class_id=0)
        twin = TemporalModel(class_id=1, scores=model.scores, n_samples=model.n_samples)
        scores = score_vector([model, twin], 77)
        assert scores[0] == scores[1]

    def test_missing_model(self):
        a = fit_temporal_model([50] * 5, class_id=0)
        c = fit_temporal_model([60] * 5, class_id=2)
        with pytest.raises(MissingModel):
            score_vector([a, c], 50)


class TestSerialization:
    def test_roundtrip(self):
        models = [
            fit_temporal_model([40 + c] * 9, class_id=c) for c in range(3)
        ]
        restored = models_from_json(models_to_json(models))
        for original, back in zip(models, restored):
            assert back.class_id == original.class_id
            assert back.n_samples == original.n_samples
            np.testing.assert_array_equal(back.scores, original.scores)

    def test_wrong_length_rejected(self):
        with pytest.raises(MissingModel):
            models_from_json('[{"class_id":0,"n_samples":1,"scores":[0.5,1.0]}]')
