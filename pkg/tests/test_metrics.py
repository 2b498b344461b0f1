#!/usr/bin/env python

from __future__ import print_function, division
import numpy as np
import pytest
import deconvparse as dp
from deconvparse.metrics import confusionMatrix, accuracyMetrics, binaryCurveMetrics, MetricsReport, CSV_HEADER
from deconvparse.exceptions import DimensionError, LabelError, EvaluationError


def sweepOracle(scores, gt):
    positives = np.sum(gt == 1)
    negatives = np.sum(gt == 0)
    thresholds = [np.inf] + sorted(set(scores.tolist()), reverse=True)
    rows = []
    for t in thresholds:
        pred = scores >= t
        tp = np.sum(pred & (gt == 1))
        fp = np.sum(pred & (gt == 0))
        precision = tp/(tp + fp) if tp + fp > 0 else 1.
        recall = tp/positives
        f = 2*precision*recall/(precision + recall) if precision + recall > 0 else 0.
        rows.append((t, precision, recall, f, fp/negatives))
    ap = sum((rows[i][2] - rows[i-1][2])*rows[i][1] for i in range(1, len(rows)))
    maxF = max(r[3] for r in rows)
    best = [r for r in rows if r[3] == maxF][-1]
    return maxF, ap, best


class FixedNetwork(object):
    """Returns stored predictions in the order of the dataset."""
    def __init__(self, probs):
        self.probs = list(probs)
        self.calls = 0

    def predict(self, image, preprocess=True):
        probs = self.probs[self.calls]
        self.calls += 1
        return np.argmax(probs, axis=0), probs


class TestConfusion:
    def test_counts(self):
        M = confusionMatrix([0, 1, 1, 2, 2, 2], [0, 1, 2, 2, 2, 0], 3)
        np.testing.assert_array_equal(M, [[1, 0, 1], [0, 1, 0], [0, 1, 2]],
                                      err_msg='Rows must index the ground truth, columns the prediction.')

    def test_errors(self):
        with pytest.raises(DimensionError):
            confusionMatrix([0, 1], [0], 2)
        with pytest.raises(LabelError):
            confusionMatrix([0, 2], [0, 1], 2)


class TestAccuracy:
    def test_hand_example(self):
        pixel, cls = accuracyMetrics([[8, 2], [1, 1]])
        np.testing.assert_almost_equal(pixel, 9/12., decimal=12, err_msg='Erroneous pixel accuracy.')
        np.testing.assert_almost_equal(cls, (0.8 + 0.5)/2, decimal=12, err_msg='Erroneous class accuracy.')

    def test_absent_class_ignored(self):
        pixel, cls = accuracyMetrics([[3, 1, 0], [0, 0, 0], [0, 0, 4]])
        np.testing.assert_almost_equal(cls, (0.75 + 1.)/2, decimal=12,
                                       err_msg='Classes without ground-truth pixels must be skipped.')

    def test_perfect(self):
        assert accuracyMetrics(np.diag([5, 3, 2])) == (1., 1.)

    def test_empty(self):
        with pytest.raises(EvaluationError):
            accuracyMetrics(np.zeros((2, 2)))


class TestBinaryCurve:
    def test_random_instances(self):
        rng = np.random.RandomState(0)
        for _ in range(100):
            n = rng.randint(2, 60)
            # coarse scores produce ties
            scores = np.round(rng.uniform(size=n), rng.randint(1, 3))
            gt = rng.randint(0, 2, size=n)
            gt[:2] = [0, 1]
            curve = binaryCurveMetrics(scores, gt)
            maxF, ap, best = sweepOracle(scores, gt)
            np.testing.assert_allclose(curve.maxF, maxF, atol=1e-12, err_msg='MaxF differs from the sweep.')
            np.testing.assert_allclose(curve.ap, ap, atol=1e-12, err_msg='AP differs from the sweep.')
            assert curve.threshold == best[0]
            np.testing.assert_allclose([curve.precision, curve.recall, curve.fpr, curve.fnr],
                                       [best[1], best[2], best[4], 1. - best[2]], atol=1e-12,
                                       err_msg='Rates must be reported at the MaxF threshold.')

    def test_perfect_separation(self):
        curve = binaryCurveMetrics([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert curve.maxF == 1. and curve.ap == 1.
        assert curve.threshold == 0.8
        assert curve.fpr == 0. and curve.fnr == 0.

    def test_constant_scores(self):
        curve = binaryCurveMetrics([0.5]*4, [1, 0, 0, 0])
        np.testing.assert_almost_equal(curve.maxF, 0.4, decimal=12, err_msg='Erroneous MaxF of constant scores.')
        np.testing.assert_almost_equal(curve.ap, 0.25, decimal=12, err_msg='Erroneous AP of constant scores.')

    def test_single_class(self):
        with pytest.raises(EvaluationError):
            binaryCurveMetrics([0.1, 0.2], [1, 1])

    def test_invalid_input(self):
        with pytest.raises(EvaluationError):
            binaryCurveMetrics([np.nan, 0.2], [0, 1])
        with pytest.raises(LabelError):
            binaryCurveMetrics([0.1, 0.2], [0, 2])
        with pytest.raises(DimensionError):
            binaryCurveMetrics([0.1, 0.2, 0.3], [0, 1])


class TestEvaluate:
    def test_multiclass(self):
        labels = np.array([[0, 1], [2, 2]])
        data = dp.SceneDataset([dp.SceneSample(np.zeros((1, 2, 2)), labels)]*2, 3, name='test')
        probs = np.zeros((3, 2, 2))
        probs[0] = 1.
        report = dp.evaluate(FixedNetwork([np.eye(3)[labels].transpose(2, 0, 1), probs]), data)
        np.testing.assert_array_equal(report.confusion, [[2, 0, 0], [1, 1, 0], [2, 0, 2]],
                                      err_msg='Erroneous accumulated confusion matrix.')
        assert report.pixelAccuracy == 5/8.
        assert report.curve is None
        row = report.toRow()
        assert len(row) == len(CSV_HEADER)
        assert row[:2] == ['test', 2] and row[4:] == ['']*6

    def test_binary(self):
        labels = np.array([[0, 0], [1, 1]])
        data = dp.SceneDataset([dp.SceneSample(np.zeros((1, 2, 2)), labels)], 2)
        p1 = np.array([[0.1, 0.6], [0.7, 0.9]])
        report = dp.evaluate(FixedNetwork([np.stack([1. - p1, p1])]), data)
        assert report.curve.maxF == 1.
        assert report.curve.threshold == 0.7
        assert report.pixelAccuracy == 0.75
        assert report.toRow()[4] == '1.0'

    def test_binary_single_class(self):
        labels = np.zeros((2, 2), dtype=int)
        data = dp.SceneDataset([dp.SceneSample(np.zeros((1, 2, 2)), labels)], 2)
        report = dp.evaluate(FixedNetwork([np.stack([np.ones((2, 2)), np.zeros((2, 2))])]), data)
        assert report.curve is None
        assert report.classAccuracy == 1.

    def test_repr(self):
        assert 'pixel_acc=0.7500' in repr(MetricsReport([[3, 1], [0, 0]], dataset='x'))
