import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from ppc_uq import statistics as st
from ppc_uq.predictive import InvalidParameterError, PosteriorWeights

from conftest import ks_uniform


def two_model_onehot(n=1):
    probs = np.zeros((n, 2, 2))
    probs[:, 0, 0] = 1.0
    probs[:, 1, 1] = 1.0
    return st.EnsemblePredictions.from_probs(probs)


class TestIntegratedClassProbs:
    def test_single_model_identity(self):
        probs = np.array([[[0.2, 0.8]], [[0.7, 0.3]]])
        preds = st.EnsemblePredictions.from_probs(probs)
        out = st.integrated_class_probs(preds)
        np.testing.assert_allclose(out, probs[:, 0, :])

    def test_equal_weight_average(self):
        out = st.integrated_class_probs(two_model_onehot())
        np.testing.assert_allclose(out, [[0.5, 0.5]])

    def test_weighted_average(self):
        out = st.integrated_class_probs(two_model_onehot(),
                                        PosteriorWeights((0.75, 0.25)))
        np.testing.assert_allclose(out, [[0.75, 0.25]])

    def test_kind_mismatch(self):
        preds = st.EnsemblePredictions.from_gaussians([[0.0]], [[1.0]])
        with pytest.raises(st.KindMismatchError):
            st.integrated_class_probs(preds)

    def test_rows_sum_to_one(self, rng):
        raw = rng.random((8, 4, 3))
        probs = raw / raw.sum(axis=2, keepdims=True)
        out = st.integrated_class_probs(st.EnsemblePredictions.from_probs(probs))
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-6)


class TestEce:
    def test_perfectly_confident_and_correct(self):
        probs = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert st.ece(probs, [0, 0]) == 0.0

    def test_single_bin_hand_value(self):
        probs = np.array([[0.9, 0.1], [0.3, 0.7]])  # conf 0.9 correct, 0.7 wrong
        labels = [0, 0]
        got = st.ece(probs, labels, st.BinningConfig(num_bins=1))
        assert got == pytest.approx(0.3, abs=1e-12)

    def test_two_bin_hand_value(self):
        probs = np.array([[0.4, 0.3, 0.3], [0.9, 0.05, 0.05]])
        labels = [0, 1]  # first correct at conf 0.4, second wrong at conf 0.9
        got = st.ece(probs, labels, st.BinningConfig(num_bins=2))
        assert got == pytest.approx(0.75, abs=1e-12)

    def test_empty_rows(self):
        with pytest.raises(st.EmptyInputError):
            st.ece(np.empty((0, 2)), [])

    def test_range(self, rng):
        raw = rng.random((50, 4))
        probs = raw / raw.sum(axis=1, keepdims=True)
        labels = rng.integers(0, 4, 50)
        assert 0.0 <= st.ece(probs, labels) <= 1.0


class TestPitValues:
    def test_single_model_at_mean(self):
        preds = st.EnsemblePredictions.from_gaussians([[0.0]], [[1.0]])
        np.testing.assert_allclose(st.pit_values(preds, labels=[0.0]), [0.5])

    def test_symmetric_pair(self):
        preds = st.EnsemblePredictions.from_gaussians([[-1.0, 1.0]], [[1.0, 1.0]])
        np.testing.assert_allclose(st.pit_values(preds, labels=[0.0]), [0.5],
                                   atol=1e-15)

    def test_location_marginal(self):
        s = math.sqrt(2.0)
        preds = st.EnsemblePredictions.from_gaussians([[0.0], [0.0]], [[s], [s]])
        got = st.pit_values(preds, labels=[0.0, 1.0])
        np.testing.assert_allclose(got, [0.5, 0.7602499389], atol=1e-9)

    def test_kind_mismatch(self):
        with pytest.raises(st.KindMismatchError):
            st.pit_values(two_model_onehot(), labels=[0])

    def test_point_estimate_pit_uniform(self, rng):
        # M = 1 model scoring data sampled from itself
        n = 100_000
        means = rng.normal(0, 2, n)
        stds = np.full(n, 0.8)
        y = means + stds * rng.standard_normal(n)
        preds = st.EnsemblePredictions.from_gaussians(means[:, None], stds[:, None])
        assert ks_uniform(st.pit_values(preds, labels=y)) < 0.01


class TestCalibrationError:
    def test_balanced_pit_zero(self):
        assert st.calibration_error([0.1, 0.9], st.QuantileSet((0.5,))) == 0.0

    def test_hand_value(self):
        got = st.calibration_error([0.1, 0.9], st.QuantileSet((0.25, 0.5, 0.75)))
        assert got == pytest.approx(0.125, abs=1e-12)

    def test_all_zero_pit(self):
        assert st.calibration_error([0.0, 0.0], st.QuantileSet((0.5,))) == \
            pytest.approx(0.25, abs=1e-12)

    def test_empty(self):
        with pytest.raises(st.EmptyInputError):
            st.calibration_error([])

    def test_uniform_pit_is_small(self):
        # perfect calibration in the no-model-uncertainty case
        for seed in range(20):
            pit = np.random.default_rng(seed).random(100_000)
            assert st.calibration_error(pit) < 0.01

    def test_upper_bound(self, rng):
        qs = st.QuantileSet()
        levels = qs.as_array()
        bound = np.sum(np.maximum(levels, 1 - levels) ** 2)
        for _ in range(5):
            pit = rng.random(100)
            assert 0.0 <= st.calibration_error(pit, qs) <= bound


class TestPicp:
    def test_all_interior(self):
        assert st.picp([0.5, 0.3, 0.6]) == 1.0

    def test_half_inside(self):
        assert st.picp([0.01, 0.5, 0.99, 0.5]) == 0.5

    def test_boundary_inclusive(self):
        assert st.picp([0.025]) == 1.0

    def test_errors(self):
        with pytest.raises(st.EmptyInputError):
            st.picp([])
        with pytest.raises(InvalidParameterError):
            st.picp([0.5], lower=0.9, upper=0.1)


class TestAccuracy:
    def test_perfect(self):
        probs = np.eye(3)
        assert st.accuracy(probs, [0, 1, 2]) == 1.0

    def test_all_wrong(self):
        probs = np.eye(3)
        assert st.accuracy(probs, [1, 2, 0]) == 0.0

    def test_two_thirds(self):
        probs = np.eye(3)
        assert st.accuracy(probs, [0, 1, 0]) == pytest.approx(2 / 3)

    def test_empty(self):
        with pytest.raises(st.EmptyInputError):
            st.accuracy(np.empty((0, 2)), [])


@given(hst.integers(0, 2 ** 32 - 1))
@settings(max_examples=20)
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    n = 40
    raw = rng.random((n, 3))
    probs = raw / raw.sum(axis=1, keepdims=True)
    labels = rng.integers(0, 3, n)
    pit = rng.random(n)
    perm = rng.permutation(n)
    assert st.ece(probs, labels) == pytest.approx(st.ece(probs[perm], labels[perm]))
    assert st.accuracy(probs, labels) == st.accuracy(probs[perm], labels[perm])
    assert st.calibration_error(pit) == pytest.approx(st.calibration_error(pit[perm]))
    assert st.picp(pit) == st.picp(pit[perm])
