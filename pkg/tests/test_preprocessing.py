#!/usr/bin/env python

from __future__ import print_function, division
import numpy as np
import pytest
import deconvparse as dp
from deconvparse.preprocessing import channelStats, standardize, localContrastNormalize, classWeights, \
    balancedBatches, subsampleLabels
from deconvparse.exceptions import ParameterError, DatasetError, DimensionError


class TestStandardize:
    def test_dataset_mode(self):
        data = dp.generateSyntheticScenes(5, 3, 16, seed=0)
        out = standardize(data)
        images = out.images
        assert isinstance(out, dp.SceneDataset)
        assert np.all(np.abs(images.mean(axis=(0, 2, 3))) <= 1e-9)
        np.testing.assert_allclose(images.var(axis=(0, 2, 3)), np.ones(3), atol=1e-9,
                                   err_msg='Standardized channels must have unit variance.')
        np.testing.assert_array_equal(out.labels, data.labels, err_msg='Standardization must not touch labels.')

    def test_given_statistics(self):
        images = np.ones((2, 2, 3, 3))
        out = standardize(images, mean=[0.5, 1.], std=[0.25, 2.])
        np.testing.assert_allclose(out[:, 0], 2., rtol=1e-12, err_msg='Erroneous standardization.')
        np.testing.assert_allclose(out[:, 1], 0., atol=1e-12, err_msg='Erroneous standardization.')

    def test_image_mode(self):
        rng = np.random.RandomState(0)
        images = rng.uniform(size=(3, 2, 8, 8))*np.arange(1, 4)[:, None, None, None]
        out = standardize(images, mode='image')
        assert np.all(np.abs(out.mean(axis=(2, 3))) <= 1e-9)
        np.testing.assert_allclose(out.var(axis=(2, 3)), np.ones((3, 2)), atol=1e-9,
                                   err_msg='Every image must be standardized by its own statistics.')

    def test_constant_channel(self):
        mean, std = channelStats(np.full((2, 1, 4, 4), 0.3))
        assert std[0] == 1e-8
        assert np.all(np.isfinite(standardize(np.full((2, 1, 4, 4), 0.3))))

    def test_unknown_mode(self):
        with pytest.raises(ParameterError):
            standardize(np.ones((1, 1, 2, 2)), mode='global')

    def test_bad_shape(self):
        with pytest.raises(DimensionError):
            channelStats(np.ones((2, 2)))


class TestLocalContrastNormalization:
    def test_shift_invariance(self):
        rng = np.random.RandomState(1)
        image = rng.uniform(size=(3, 12, 12))
        np.testing.assert_allclose(localContrastNormalize(image + 5.), localContrastNormalize(image), atol=1e-9,
                                   err_msg='LCN must be invariant to additive shifts.')

    def test_scale_invariance(self):
        rng = np.random.RandomState(2)
        image = rng.uniform(size=(10, 10))
        np.testing.assert_allclose(localContrastNormalize(3.*image, 5), localContrastNormalize(image, 5), atol=1e-6,
                                   err_msg='LCN must be invariant to scaling of a textured image.')

    def test_constant_image(self):
        out = localContrastNormalize(np.full((1, 6, 6), 0.7), 3)
        np.testing.assert_allclose(out, np.zeros((1, 6, 6)), atol=1e-9, err_msg='A constant image must map to zero.')

    def test_shape(self):
        assert localContrastNormalize(np.ones((7, 9)), 3).shape == (7, 9)
        assert localContrastNormalize(np.ones((2, 7, 9)), 3).shape == (2, 7, 9)

    def test_invalid_window(self):
        for window in [1, 4, 2.5]:
            with pytest.raises(ParameterError):
                localContrastNormalize(np.ones((5, 5)), window)


class TestClassBalancing:
    def setup_method(self):
        labels = np.zeros((1, 100, 100), dtype=int)
        labels[0, :10, :10] = 1
        self.labels = labels

    def test_balanced_frequencies(self):
        drawn = np.concatenate(list(balancedBatches(self.labels, 1000, seed=0, numBatches=100)))
        assert drawn.shape == (100000, 4)
        frequency = np.mean(drawn[:, 3] == 1)
        assert abs(frequency - 0.5) <= 0.02
        np.testing.assert_array_equal(self.labels[drawn[:, 0], drawn[:, 1], drawn[:, 2]], drawn[:, 3],
                                      err_msg='Drawn pixels must carry the drawn class.')

    def test_every_class_in_batch(self):
        data = dp.generateSyntheticScenes(3, 4, 16, seed=0)
        for batch in balancedBatches(data, 8, seed=1, numBatches=20):
            assert set(batch[:, 3]) == {0, 1, 2, 3}

    def test_reproducible(self):
        a = next(balancedBatches(self.labels, 10, seed=5))
        b = next(balancedBatches(self.labels, 10, seed=5))
        np.testing.assert_array_equal(a, b, err_msg='Sampling must be reproducible for a fixed seed.')

    def test_single_class(self):
        with pytest.raises(DatasetError):
            balancedBatches(np.zeros((1, 4, 4), dtype=int), 4, seed=0)

    def test_absent_class(self):
        data = dp.SceneDataset([dp.SceneSample(np.zeros((1, 4, 4)), np.eye(4, dtype=int))], 3)
        with pytest.raises(DatasetError):
            balancedBatches(data, 4, seed=0)

    def test_weights(self):
        weights = classWeights(self.labels, 3)
        np.testing.assert_allclose(weights, [10000./(3*9900), 10000./(3*100), 0.], rtol=1e-12,
                                   err_msg='Erroneous inverse-frequency class weights.')
        counts = np.bincount(self.labels.ravel(), minlength=3)
        np.testing.assert_allclose((weights*counts)[:2], [10000./3]*2, rtol=1e-12,
                                   err_msg='Weighted classes must contribute equally.')


class TestSubsampleLabels:
    def test_nearest_neighbor(self):
        labels = np.arange(16).reshape(4, 4)
        np.testing.assert_array_equal(subsampleLabels(labels, (2, 2)), [[5, 7], [13, 15]],
                                      err_msg='Erroneous label subsampling.')

    def test_identity(self):
        labels = np.arange(12).reshape(3, 4)
        np.testing.assert_array_equal(subsampleLabels(labels, (3, 4)), labels,
                                      err_msg='Subsampling to the same shape must be the identity.')
