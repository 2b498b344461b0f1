#!/usr/bin/env python
"""
This file implements the evaluation of scene-parsing results: confusion matrices, per-pixel and average per-class
accuracy, and, for two-class problems with probability scores, the threshold-sweep metrics maximum F1-measure (MaxF),
average precision (AP) and precision, recall, false-positive and false-negative rate at the MaxF threshold.
"""

from __future__ import division, print_function
from collections import namedtuple
import numpy as np
from .helper import progress
from .exceptions import DimensionError, LabelError, EvaluationError

CurveMetrics = namedtuple('CurveMetrics', ['maxF', 'ap', 'precision', 'recall', 'fpr', 'fnr', 'threshold'])

# column order of metrics CSV files
CSV_HEADER = ['dataset', 'samples', 'pixel_acc', 'class_acc', 'maxf', 'ap', 'pre', 'rec', 'fpr', 'fnr']


def confusionMatrix(pred, gt, C):
    """
    Confusion matrix with rows indexing the ground truth and columns the prediction.

    Args:
        pred: Predicted labels (any shape)
        gt: Ground-truth labels of the same shape
        C(int): Number of classes

    Returns:
        ndarray: Integer matrix [C, C]
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DimensionError('Prediction of shape {} does not fit ground truth of shape {}.'.format(pred.shape,
                                                                                                   gt.shape))
    for name, labels in [('prediction', pred), ('ground truth', gt)]:
        if labels.size and (labels.min() < 0 or labels.max() >= C):
            raise LabelError('Labels of the {} must lie in [0, {}).'.format(name, C))
    index = gt.astype(np.int64).ravel()*C + pred.astype(np.int64).ravel()
    return np.bincount(index, minlength=C*C).reshape(C, C)


def accuracyMetrics(M):
    """
    Per-pixel accuracy (trace/total) and average per-class accuracy (mean recall over all classes that occur in the
    ground truth).

    Args:
        M: Confusion matrix [C, C]

    Returns:
        tuple: (pixel accuracy, class accuracy)
    """
    M = np.asarray(M, dtype=np.float64)
    total = M.sum()
    if total == 0:
        raise EvaluationError('Cannot compute accuracies from an empty confusion matrix.')
    rows = M.sum(axis=1)
    present = rows > 0
    return float(np.trace(M)/total), float(np.mean(np.diag(M)[present]/rows[present]))


def binaryCurveMetrics(scores, gt):
    """
    Sweeps the decision threshold over all distinct score values (plus +inf) of a binary problem. A pixel is predicted
    positive if its score is >= the threshold; precision is 1 if nothing is predicted positive. AP is the step-wise
    integral of precision over recall; precision, recall, FPR and FNR are reported at the threshold that achieves MaxF
    (the lowest one on ties).

    Args:
        scores: Finite scores (any shape)
        gt: Binary ground-truth labels of the same shape

    Returns:
        CurveMetrics
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    gt = np.asarray(gt).ravel()
    if scores.shape != gt.shape:
        raise DimensionError('Got {} scores for {} labels.'.format(scores.size, gt.size))
    if not np.all(np.isfinite(scores)):
        raise EvaluationError('Scores must be finite.')
    if gt.size and (gt.min() < 0 or gt.max() > 1):
        raise LabelError('Binary curve metrics need labels 0 and 1.')
    positives = int(np.sum(gt == 1))
    negatives = gt.size - positives
    if positives == 0 or negatives == 0:
        raise EvaluationError('Binary curve metrics need both classes in the ground truth.')

    order = np.argsort(-scores, kind='mergesort')
    s = scores[order]
    labels = gt[order] == 1
    last = np.append(np.flatnonzero(s[1:] != s[:-1]), s.size - 1)

    thresholds = np.append(np.inf, s[last])
    tp = np.append(0, np.cumsum(labels)[last]).astype(np.float64)
    fp = np.append(0, np.cumsum(~labels)[last]).astype(np.float64)

    precision = np.divide(tp, tp + fp, out=np.ones_like(tp), where=(tp + fp) > 0)
    recall = tp/positives
    f1 = np.divide(2*precision*recall, precision + recall, out=np.zeros_like(tp), where=(precision + recall) > 0)

    best = np.flatnonzero(f1 == f1.max())[-1]
    ap = float(np.sum(np.diff(recall)*precision[1:]))
    return CurveMetrics(float(f1[best]), ap, float(precision[best]), float(recall[best]),
                        float(fp[best]/negatives), float(1. - recall[best]), float(thresholds[best]))


class MetricsReport(object):
    """
    Evaluation result of a network on a dataset.

    Args:
        confusion: Confusion matrix [C, C]
        curve(CurveMetrics): Binary curve metrics (two-class problems only)
        dataset(str): Name of the evaluated dataset
        samples(int): Number of evaluated samples
    """
    def __init__(self, confusion, curve=None, dataset='', samples=0):
        self.confusion = np.asarray(confusion)
        self.pixelAccuracy, self.classAccuracy = accuracyMetrics(self.confusion)
        self.curve = curve
        self.dataset = dataset
        self.samples = int(samples)

    def toRow(self):
        """
        Returns:
            list: Values in the column order of CSV_HEADER (binary metrics empty if not available)
        """
        row = [self.dataset, self.samples, repr(self.pixelAccuracy), repr(self.classAccuracy)]
        if self.curve is None:
            return row + ['']*6
        c = self.curve
        return row + [repr(v) for v in (c.maxF, c.ap, c.precision, c.recall, c.fpr, c.fnr)]

    def __repr__(self):
        text = 'MetricsReport(dataset={!r}, pixel_acc={:.4f}, class_acc={:.4f}'.format(self.dataset,
                                                                                    self.pixelAccuracy,
                                                                                    self.classAccuracy)
        if self.curve is not None:
            text += ', maxF={:.4f}, ap={:.4f}'.format(self.curve.maxF, self.curve.ap)
        return text + ')'


def evaluate(network, dataset, preprocess=True, silent=True):
    """
    Predicts all samples of a dataset and summarizes the result. For two-class datasets, the binary curve metrics are
    computed from the probability of class 1 (if both classes occur).

    Args:
        network(Network): Trained network
        dataset(SceneDataset): Dataset with raw images (or preprocessed images if preprocess is False)
        preprocess(bool): Passed on to Network.predict
        silent(bool): If set to True, no progress bar is shown.

    Returns:
        MetricsReport
    """
    C = dataset.classes
    confusion = np.zeros((C, C), dtype=np.int64)
    scores = []
    for sample in progress(dataset, total=len(dataset), silent=silent, desc='eval'):
        labels, probs = network.predict(sample.image, preprocess=preprocess)
        confusion += confusionMatrix(labels, sample.labels, C)
        if C == 2:
            scores.append(probs[1])

    curve = None
    if C == 2 and 0 < confusion[1].sum() < confusion.sum():
        curve = binaryCurveMetrics(np.stack(scores), dataset.labels)
    return MetricsReport(confusion, curve, dataset.name, len(dataset))
