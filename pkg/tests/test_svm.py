"""Dual coordinate descent SVM against constructions and the QP oracle."""

import numpy as np
import pytest

from eventfuse.errors import DegenerateLabels, DimensionError
from eventfuse.svm import (
    BinarySvm,
    decision_values,
    dual_objective,
    hinge_losses,
    primal_objective,
    solve_dual,
    train_binary_svm,
)

from helpers import svm_dual_oracle


def separable_blobs(seed=7, n=50, sigma=0.1):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [rng.normal([-2.0, 0.0], sigma, (n, 2)), rng.normal([2.0, 0.0], sigma, (n, 2))]
    )
    y = np.concatenate([-np.ones(n), np.ones(n)])
    return X, y


class TestTraining:
    def test_separable_blobs_zero_hinge(self):
        X, y = separable_blobs()
        model = train_binary_svm(X, y, cost=1.0, seed=7)
        predictions = np.sign(decision_values(model, X))
        assert np.mean(predictions == y) == 1.0
        # hinge losses vanish at the optimum; the solver stops at projected
        # gradient 1e-4, so allow exactly that slack
        assert hinge_losses(model, X, y).max() <= 1e-4

    def test_swap_symmetric_data_gives_symmetric_weights(self):
        # every point sits below margin 1, so all duals saturate at the box
        # bound and the weight vector is an exact symmetric sum
        pos = np.array([[0.01, 0.02], [0.02, 0.01], [0.03, 0.03]])
        X = np.vstack([pos, -pos])
        y = np.concatenate([np.ones(3), -np.ones(3)])
        model = train_binary_svm(X, y, cost=1.0, seed=0)
        assert abs(abs(model.weights[0]) - abs(model.weights[1])) < 1e-6

    def test_six_point_dual_matches_oracle(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(6, 2))
        y = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        model, alpha = solve_dual(X, y, cost=1.0, seed=3)
        ours = dual_objective(model, alpha)
        oracle = svm_dual_oracle(X, y, cost=1.0)
        assert abs(ours - oracle) < 1e-6

    def test_more_small_problems_match_oracle(self):
        rng = np.random.default_rng(99)
        for trial in range(8):
            n = int(rng.integers(4, 11))
            X = rng.normal(size=(n, 3))
            y = np.concatenate([np.ones(n // 2), -np.ones(n - n // 2)])
            model, alpha = solve_dual(X, y, cost=1.0, seed=trial)
            ours = dual_objective(model, alpha)
            oracle = svm_dual_oracle(X, y, cost=1.0)
            assert abs(ours - oracle) < 1e-6

    def test_dual_primal_gap_small_at_convergence(self):
        X, y = separable_blobs(seed=5, n=60, sigma=0.4)
        model, alpha = solve_dual(X, y, cost=1.0, seed=5)
        gap = primal_objective(model, X, y) - (-dual_objective(model, alpha))
        assert 0 <= gap < 1e-3

    def test_deterministic_retraining(self):
        X, y = separable_blobs(seed=2, n=30, sigma=0.5)
        a = train_binary_svm(X, y, seed=11)
        b = train_binary_svm(X, y, seed=11)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.bias == b.bias

    def test_cost_scaling_keeps_separable_data_separated(self):
        X, y = separable_blobs(seed=1)
        for cost in (1.0, 10.0):
            model = train_binary_svm(X, y, cost=cost, seed=1)
            assert np.mean(np.sign(decision_values(model, X)) == y) == 1.0
            assert hinge_losses(model, X, y).max() <= 1e-3

    def test_single_sign_labels(self):
        X = np.zeros((4, 2))
        with pytest.raises(DegenerateLabels):
            train_binary_svm(X, np.ones(4))

    def test_dual_feasibility(self):
        X, y = separable_blobs(seed=8, n=25, sigma=0.8)
        _, alpha = solve_dual(X, y, cost=1.0, seed=8)
        assert np.all(alpha >= 0.0)
        assert np.all(alpha <= 1.0)


class TestDecisionValues:
    def test_zero_vector_gives_bias(self):
        model = BinarySvm(weights=np.array([1.0, -2.0]), bias=0.7, cost=1.0)
        assert decision_values(model, np.zeros(2)) == pytest.approx(0.7)

    def test_linearity(self):
        model = BinarySvm(weights=np.array([0.5, 1.5]), bias=0.0, cost=1.0)
        x = np.array([1.0, -3.0])
        assert decision_values(model, x) == pytest.approx(-decision_values(model, -x))

    def test_known_arithmetic(self):
        model = BinarySvm(weights=np.array([1.0, 2.0]), bias=0.5, cost=1.0)
        assert decision_values(model, np.array([3.0, 4.0])) == pytest.approx(11.5)

    def test_dimension_mismatch(self):
        model = BinarySvm(weights=np.array([1.0, 2.0]), bias=0.0, cost=1.0)
        with pytest.raises(DimensionError):
            decision_values(model, np.zeros((3, 5)))
