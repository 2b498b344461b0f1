#!/usr/bin/env python

from __future__ import print_function, division
import numpy as np
import pytest
import deconvparse as dp
from deconvparse.cnnLayers import ConvStageParams, HeadParams, convStageForward, convStageBackward, dropoutApply, \
    headForward, headBackward, crossEntropyLoss, crossEntropyGradient, localHeadForward, localHeadBackward, sgdStep
from deconvparse.exceptions import DimensionError, ParameterError, LabelError, ConfigurationError


def toyLoss(x, stage, head, target):
    maps, _ = convStageForward(x, stage)
    return crossEntropyLoss(headForward(maps, head), target)


def relativeError(a, b):
    return np.max(np.abs(a - b)/np.maximum(np.abs(a) + np.abs(b), 1e-3))


class TestConvStage:
    def test_forward_shape(self):
        stage = ConvStageParams.initialize(4, 3, 3, 2, rng=0)
        out, switches = convStageForward(np.ones((3, 10, 10)), stage)
        assert out.shape == (4, 4, 4)
        assert switches.inputShape == (4, 8, 8)

    def test_relu_and_pool(self):
        stage = ConvStageParams(np.ones((1, 1, 1, 1)), [0.], pool=2)
        x = np.array([[[1., -3.], [-2., 0.5]]])
        out, _ = convStageForward(x, stage)
        np.testing.assert_array_equal(out, [[[1.]]], err_msg='Erroneous ReLU/max-pooling output.')

    def test_bias_shape(self):
        with pytest.raises(DimensionError):
            ConvStageParams(np.ones((2, 1, 3, 3)), np.zeros(3))

    def test_gradient_check(self):
        rng = np.random.RandomState(0)
        x = rng.normal(size=(2, 8, 8))
        stage = ConvStageParams(rng.normal(0., 0.5, size=(3, 2, 3, 3)), rng.normal(0.1, 0.1, size=3), pool=2)
        head = HeadParams(rng.normal(0., 0.1, size=(8*8*3, 27)), rng.normal(0., 0.1, size=8*8*3), (8, 8), 3)
        target = rng.randint(0, 3, size=(8, 8))

        maps, switches = convStageForward(x, stage)
        pred = headForward(maps, head)
        gradW, gradB, gradMaps = headBackward(maps, head, crossEntropyGradient(pred, target))
        gradX, gradF, gradBias = convStageBackward(x, stage, switches, gradMaps)

        eps = 1e-6
        numeric = np.zeros_like(stage.filters)
        for idx in np.ndindex(*stage.filters.shape):
            plus, minus = stage.copy(), stage.copy()
            plus.filters[idx] += eps
            minus.filters[idx] -= eps
            numeric[idx] = (toyLoss(x, plus, head, target) - toyLoss(x, minus, head, target))/(2*eps)
        assert relativeError(gradF, numeric) <= 1e-4

        numeric = np.zeros(3)
        for k in range(3):
            plus, minus = stage.copy(), stage.copy()
            plus.biases[k] += eps
            minus.biases[k] -= eps
            numeric[k] = (toyLoss(x, plus, head, target) - toyLoss(x, minus, head, target))/(2*eps)
        assert relativeError(gradBias, numeric) <= 1e-4

        numeric = np.zeros(10)
        for i, idx in enumerate(zip(rng.randint(0, 2, 10), rng.randint(0, 8, 10), rng.randint(0, 8, 10))):
            xp, xm = x.copy(), x.copy()
            xp[idx] += eps
            xm[idx] -= eps
            numeric[i] = (toyLoss(xp, stage, head, target) - toyLoss(xm, stage, head, target))/(2*eps)
            assert relativeError(gradX[idx], numeric[i]) <= 1e-4

        for _ in range(10):
            r, c = rng.randint(0, head.outputUnits), rng.randint(0, head.featureDim)
            plus, minus = head.copy(), head.copy()
            plus.weights[r, c] += eps
            minus.weights[r, c] -= eps
            numeric = (toyLoss(x, stage, plus, target) - toyLoss(x, stage, minus, target))/(2*eps)
            assert relativeError(gradW[r, c], numeric) <= 1e-4


class TestDropout:
    def test_evaluation_is_identity(self):
        x = np.arange(10.)
        np.testing.assert_array_equal(dropoutApply(x, 0.5, rng=0, training=False), x,
                                      err_msg='Dropout must be the identity at evaluation.')

    def test_zero_rate(self):
        x = np.arange(10.)
        np.testing.assert_array_equal(dropoutApply(x, 0., rng=0), x, err_msg='Rate 0 must be the identity.')

    def test_expectation(self):
        x = np.ones(200000)
        out = dropoutApply(x, 0.6975, rng=1)
        np.testing.assert_allclose(out.mean(), 1., atol=0.02, err_msg='Inverted dropout must preserve the mean.')
        np.testing.assert_allclose(np.mean(out == 0.), 0.6975, atol=0.01, err_msg='Erroneous drop fraction.')

    def test_invalid_rate(self):
        with pytest.raises(ParameterError):
            dropoutApply(np.ones(3), 1., rng=0)


class TestHead:
    def test_softmax_sums_to_one(self):
        rng = np.random.RandomState(2)
        head = HeadParams.initialize(12, (3, 4), 5, 'softmax', rng, std=1.)
        pred = headForward(rng.normal(size=12), head)
        assert pred.shape == (3, 4, 5)
        np.testing.assert_allclose(pred.sum(axis=-1), np.ones((3, 4)), rtol=1e-12,
                                   err_msg='Class distributions must sum to one.')

    def test_sigmoid_mode(self):
        rng = np.random.RandomState(3)
        head = HeadParams.initialize(6, (2, 2), 2, 'sigmoid', rng, std=1.)
        assert head.outputUnits == 4
        pred = headForward(rng.normal(size=6), head)
        assert pred.shape == (2, 2, 2)
        np.testing.assert_allclose(pred.sum(axis=-1), np.ones((2, 2)), rtol=1e-12,
                                   err_msg='Sigmoid distributions must sum to one.')

    def test_sigmoid_needs_two_classes(self):
        with pytest.raises(ConfigurationError):
            HeadParams.initialize(6, (2, 2), 3, 'sigmoid', 0)

    def test_sigmoid_gradient(self):
        rng = np.random.RandomState(4)
        head = HeadParams.initialize(5, (2, 3), 2, 'sigmoid', rng, std=0.5)
        features = rng.normal(size=5)
        target = rng.randint(0, 2, size=(2, 3))
        pred = headForward(features, head)
        gradW = headBackward(features, head, crossEntropyGradient(pred, target, mode='sigmoid'))[0]
        eps = 1e-6
        plus, minus = head.copy(), head.copy()
        plus.weights[1, 2] += eps
        minus.weights[1, 2] -= eps
        numeric = (crossEntropyLoss(headForward(features, plus), target) -
                   crossEntropyLoss(headForward(features, minus), target))/(2*eps)
        assert relativeError(gradW[1, 2], numeric) <= 1e-4

    def test_feature_mismatch(self):
        head = HeadParams.initialize(6, (2, 2), 3, 'softmax', 0)
        with pytest.raises(DimensionError):
            headForward(np.ones(7), head)


class TestCrossEntropy:
    def test_perfect_prediction(self):
        pred = np.array([[[1., 0.], [0., 1.]]])
        assert crossEntropyLoss(pred, [[0, 1]]) == 0.

    def test_uniform_prediction(self):
        pred = np.full((2, 2, 4), 0.25)
        np.testing.assert_almost_equal(crossEntropyLoss(pred, np.zeros((2, 2), dtype=int)), np.log(4.), decimal=12,
                                       err_msg='Erroneous cross entropy of a uniform prediction.')

    def test_clamping(self):
        pred = np.array([[1., 0.]])
        np.testing.assert_almost_equal(crossEntropyLoss(pred, [1]), -np.log(1e-12), decimal=8,
                                       err_msg='Probabilities must be clamped.')

    def test_class_weights(self):
        pred = np.array([[0.5, 0.5], [0.9, 0.1]])
        loss = crossEntropyLoss(pred, [0, 1], weights=[1., 3.])
        np.testing.assert_almost_equal(loss, (-np.log(0.5) - 3*np.log(0.1))/4., decimal=12,
                                       err_msg='Erroneous weighted cross entropy.')

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            crossEntropyLoss(np.full((2, 3), 1/3.), [0, 3])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            crossEntropyLoss(np.full((2, 3), 1/3.), [0, 1, 2])


class TestLocalHead:
    def test_gradient(self):
        rng = np.random.RandomState(5)
        maps = rng.normal(size=(4, 3, 3))
        V = rng.normal(size=(3, 4))
        b = rng.normal(size=3)
        target = rng.randint(0, 3, size=(3, 3))
        pred = localHeadForward(maps, V, b)
        gradV, gradB, gradMaps = localHeadBackward(maps, V, crossEntropyGradient(pred, target))
        eps = 1e-6
        Vp, Vm = V.copy(), V.copy()
        Vp[2, 1] += eps
        Vm[2, 1] -= eps
        numeric = (crossEntropyLoss(localHeadForward(maps, Vp, b), target) -
                   crossEntropyLoss(localHeadForward(maps, Vm, b), target))/(2*eps)
        assert relativeError(gradV[2, 1], numeric) <= 1e-4
        mp, mm = maps.copy(), maps.copy()
        mp[1, 2, 0] += eps
        mm[1, 2, 0] -= eps
        numeric = (crossEntropyLoss(localHeadForward(mp, V, b), target) -
                   crossEntropyLoss(localHeadForward(mm, V, b), target))/(2*eps)
        assert relativeError(gradMaps[1, 2, 0], numeric) <= 1e-4
        assert gradB.shape == (3,)


class TestSgd:
    def test_step(self):
        p = sgdStep([np.array([1., 2.]), np.array(3.)], [np.array([0.5, -1.]), np.array(1.)], 0.1)
        np.testing.assert_allclose(p[0], [0.95, 2.1], rtol=1e-12, err_msg='Erroneous SGD update.')
        np.testing.assert_allclose(p[1], 2.9, rtol=1e-12, err_msg='Erroneous SGD update.')

    def test_single_array(self):
        p = sgdStep(np.ones(2), np.ones(2), 0.5)
        np.testing.assert_array_equal(p, [0.5, 0.5], err_msg='Erroneous SGD update of a single array.')

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            sgdStep([np.ones(2)], [np.ones(3)], 0.1)

    def test_short_form_module(self):
        assert dp.cl.sgdStep is sgdStep
