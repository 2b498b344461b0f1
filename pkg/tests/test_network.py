#!/usr/bin/env python

from __future__ import print_function, division
import numpy as np
import matplotlib.pyplot as plt
import pytest
import deconvparse as dp
from deconvparse.exceptions import ConfigurationError, DimensionError


def tinyConfig(**changes):
    d = dict(inputShape=(3, 16, 16), classes=3, convStages=[(4, 3, 2)],
             deconvLayers=[dp.DeconvLayerConfig(numMaps=4, filterSize=2, poolRegion=(1, 1, 2), istaIterations=3,
                                                inferenceIterations=3, cgMaxIterations=10) for _ in range(2)],
             patchGrid=(2, 2), seed=1, epochsConv=2, epochsDeconv=1, epochsHead=3, lrConv=0.01, lrHead=0.05)
    d.update(changes)
    return dp.NetworkConfig(**d)


def tinyData(n=6, seed=0):
    return dp.generateSyntheticScenes(n, 3, 16, seed=seed)


class TestNetworkConfig:
    def test_layer_shapes(self):
        shapes = tinyConfig().layerShapes()
        assert [name for name, _ in shapes] == ['input', 'conv1', 'deconv1', 'deconv2']
        assert shapes[1][1] == (4, 7, 7)
        assert shapes[2][1] == (2, 6, 6)
        assert shapes[3][1] == (2, 5, 5)
        assert tinyConfig().featureDim == 50

    def test_default_shapes(self):
        shapes = dp.NetworkConfig().layerShapes()
        assert shapes[2][1] == (32, 13, 13)
        assert [shape for _, shape in shapes[3:]] == [(16, 11, 11), (16, 9, 9), (16, 7, 7)]

    def test_default_names(self):
        assert tinyConfig().name == 'Deconv-3'
        assert tinyConfig(deconvLayers=[]).name == 'CNN-1'

    def test_layer_count(self):
        # conv stage, two deconv layers, fully connected layer and classifier
        assert tinyConfig().layerCount == 5

    def test_inconsistent_chain(self):
        with pytest.raises(ConfigurationError):
            tinyConfig(inputShape=(3, 15, 15), patchGrid=(1, 1))

    def test_indivisible_grid(self):
        with pytest.raises(ConfigurationError):
            tinyConfig(patchGrid=(3, 3))

    def test_invalid_values(self):
        with pytest.raises(ConfigurationError):
            tinyConfig(classes=1)
        with pytest.raises(ConfigurationError):
            tinyConfig(headMode='sigmoid')
        with pytest.raises(ConfigurationError):
            tinyConfig(lcnWindow=4)
        with pytest.raises(ConfigurationError):
            tinyConfig(standardizeMode='global')

    def test_dict_round_trip(self):
        config = tinyConfig(sharedTrunk=False, headMode='sigmoid', classes=2, deconvTarget='image')
        assert dp.NetworkConfig.fromDict(config.toDict()).toDict() == config.toDict()

    def test_copy_renames_changed_stack(self):
        config = tinyConfig()
        assert config.copy(deconvLayers=config.deconvLayers[:1]).name == 'Deconv-2'
        assert config.copy(seed=5).name == 'Deconv-3'

    def test_parameter_count(self):
        config = tinyConfig()
        trunk = 4*3*3*3 + 4 + 4*4*2*2 + 4*2*2*2
        heads = 4*(8*8*3)*(50 + 1)
        assert config.parameterCount() == trunk + heads
        assert tinyConfig(sharedTrunk=False).parameterCount() == 4*trunk + heads


class TestVariants:
    def test_deconv_variant(self):
        config = dp.NetworkConfig().variant('Deconv-3')
        assert len(config.convStages) == 2
        assert len(config.deconvLayers) == 1
        assert config.name == 'Deconv-3'

    def test_shallow_variant(self):
        config = dp.NetworkConfig()
        assert config.variant('Deconv-2').name == 'CNN-2'
        assert config.variant('CNN-2').deconvLayers == []

    def test_parameter_parity(self):
        config = dp.NetworkConfig()
        deconv = config.variant('Deconv-5')
        cnn = config.variant('CNN-5')
        assert len(cnn.convStages) == 5
        assert cnn.deconvLayers == []
        assert cnn.featureShape == deconv.featureShape
        np.testing.assert_allclose(cnn.parameterCount(), deconv.parameterCount(), rtol=0.01,
                                   err_msg='CNN-5 must match the parameter count of Deconv-5.')

    def test_partial_replacement_parity(self):
        config = dp.NetworkConfig()
        for depth in [3, 4]:
            cnn = config.variant('CNN-{}'.format(depth))
            deconv = config.variant('Deconv-{}'.format(depth))
            np.testing.assert_allclose(cnn.parameterCount(), deconv.parameterCount(), rtol=0.01,
                                       err_msg='CNN-{} must match the parameter count of Deconv-{}.'.format(depth,
                                                                                                             depth))

    def test_unknown_variant(self):
        with pytest.raises(ConfigurationError):
            dp.NetworkConfig().variant('Deconv-6')
        with pytest.raises(ConfigurationError):
            dp.NetworkConfig().variant('ResNet-3')
        with pytest.raises(ConfigurationError):
            dp.NetworkConfig().variant('CNN-1')


class TestDeconvTarget:
    def test_image_target_shapes(self):
        config = tinyConfig(deconvTarget='image')
        shapes = config.layerShapes()
        assert shapes[1][1] == (4, 7, 7)
        assert shapes[2][1] == (2, 15, 15)
        assert shapes[3][1] == (2, 14, 14)
        assert config.featureDim == 2*14*14 + 4*7*7
        trunk = 4*3*3*3 + 4 + 4*3*2*2 + 4*2*2*2
        assert config.parameterCount() == trunk + 4*(8*8*3)*(2*14*14 + 4*7*7 + 1)

    def test_without_conv_stages(self):
        assert tinyConfig(convStages=[], deconvTarget='image').featureDim == \
            tinyConfig(convStages=[]).featureDim == 2*14*14

    def test_both_targets_train(self):
        data = tinyData(4)
        for target, inputMaps in [('features', 4), ('image', 3)]:
            net = dp.Network(tinyConfig(deconvTarget=target, epochsConv=1, epochsHead=1), silent=True)
            net.fit(data, silent=True)
            assert net.filters(2).shape == (4, inputMaps, 2, 2)
            assert net.heads[0].featureDim == net.config.featureDim
            assert [row[0] for row in net.log] == ['conv_sgd', 'deconv_ista', 'deconv_ista', 'head_sgd']
            labels, probs = net.predict(data[0].image)
            assert labels.shape == (16, 16)
            np.testing.assert_allclose(probs.sum(axis=0), np.ones((16, 16)), rtol=1e-12,
                                       err_msg='Predicted class distributions must sum to one.')

    def test_invalid_target(self):
        with pytest.raises(ConfigurationError):
            tinyConfig(deconvTarget='pixels')

    def test_replacement_needs_feature_target(self):
        config = dp.NetworkConfig(deconvTarget='image')
        assert config.variant('Deconv-4').deconvTarget == 'image'
        with pytest.raises(ConfigurationError):
            config.variant('CNN-5')


class TestTraining:
    def setup_method(self):
        self.data = tinyData()
        self.net = dp.Network(tinyConfig(), silent=True).fit(self.data, silent=True)

    def test_log_order(self):
        stages = [row[0] for row in self.net.log]
        assert stages == ['conv_sgd']*2 + ['deconv_ista']*2 + ['head_sgd']*3
        assert [row[1] for row in self.net.log if row[0] == 'deconv_ista'] == [1, 2]
        assert [row[2] for row in self.net.log if row[0] == 'head_sgd'] == [1, 2, 3]
        for row in self.net.log:
            assert np.isfinite(row[3])

    def test_prediction(self):
        labels, probs = self.net.predict(self.data[0].image)
        assert labels.shape == (16, 16)
        assert probs.shape == (3, 16, 16)
        np.testing.assert_allclose(probs.sum(axis=0), np.ones((16, 16)), rtol=1e-12,
                                   err_msg='Predicted class distributions must sum to one.')
        np.testing.assert_array_equal(labels, np.argmax(probs, axis=0), err_msg='Labels must be the argmax.')

    def test_predict_is_deterministic(self):
        first = self.net.predict(self.data[1].image)[1]
        second = self.net.predict(self.data[1].image)[1]
        np.testing.assert_array_equal(first, second, err_msg='Prediction must not depend on earlier calls.')

    def test_training_is_deterministic(self):
        other = dp.Network(tinyConfig(), silent=True).fit(self.data, silent=True)
        np.testing.assert_array_equal(self.net.predict(self.data[2].image)[1], other.predict(self.data[2].image)[1],
                                      err_msg='Training with the same seed must give the same network.')
        assert self.net.log == other.log

    def test_head_training_leaves_deconv_filters(self):
        other = dp.Network(tinyConfig(epochsHead=0), silent=True).fit(self.data, silent=True)
        for a, b in zip(self.net.trunks[0].deconvBanks, other.trunks[0].deconvBanks):
            np.testing.assert_array_equal(a.filters, b.filters,
                                          err_msg='Head training must not change deconvolutional filters.')

    def test_head_history(self):
        for head in self.net.heads:
            assert len(head.history) == 4
            assert head.history[-1] < head.history[0]

    def test_filters(self):
        assert self.net.filters(1).shape == (4, 3, 3, 3)
        assert self.net.filters(2).shape == (4, 4, 2, 2)
        assert self.net.filters(3).shape == (4, 2, 2, 2)
        with pytest.raises(ConfigurationError):
            self.net.filters(4)

    def test_geometry_mismatch(self):
        with pytest.raises(DimensionError):
            self.net.predict(np.zeros((3, 16, 20)))
        with pytest.raises(DimensionError):
            self.net.fit(dp.generateSyntheticScenes(2, 3, 20, seed=0), silent=True)

    def test_class_mismatch(self):
        with pytest.raises(ConfigurationError):
            self.net.fit(dp.generateSyntheticScenes(2, 4, 16, seed=0), silent=True)

    def test_heads_see_whole_image(self):
        for head in self.net.heads:
            assert head.featureDim == self.net.config.featureDim
        image = self.data[0].image.copy()
        changed = image.copy()
        changed[:, 12:, 12:] = np.random.RandomState(5).uniform(size=(3, 4, 4))
        before = self.net.predict(image)[1][:, :8, :8]
        after = self.net.predict(changed)[1][:, :8, :8]
        assert not np.allclose(before, after), 'The top-left head must react to the bottom-right corner.'

    def test_plots(self):
        plt.figure()
        self.net.plotFilters(1)
        self.net.plotHeatmap(self.data[0].image, classIndex=2)
        plt.close()
        with pytest.raises(ConfigurationError):
            self.net.plotHeatmap(self.data[0].image, classIndex=3)
        plt.close()


class TestNetworkVariants:
    def test_untrained(self):
        net = dp.Network(tinyConfig(), silent=True)
        with pytest.raises(ConfigurationError):
            net.predict(np.zeros((3, 16, 16)))

    def test_single_class(self):
        scenes = tinyData()
        data = dp.SceneDataset([dp.SceneSample(s.image, np.zeros((16, 16), dtype=int)) for s in scenes], 3)
        net = dp.Network(tinyConfig(epochsHead=20, lrHead=1.), silent=True).fit(data, silent=True)
        labels = np.stack([net.predict(s.image)[0] for s in data])
        assert np.mean(labels == 0) >= 0.99

    def test_independent_trunks(self):
        data = tinyData(4)
        net = dp.Network(tinyConfig(sharedTrunk=False, epochsConv=1, epochsHead=1), silent=True)
        assert len(net.trunks) == 4
        net.fit(data, silent=True)
        assert not np.array_equal(net.trunks[0].convStages[0].filters, net.trunks[1].convStages[0].filters)
        labels, _ = net.predict(data[0].image)
        assert labels.shape == (16, 16)

    def test_sigmoid_head(self):
        data = dp.generateSyntheticScenes(4, 2, 16, seed=3)
        net = dp.Network(tinyConfig(classes=2, headMode='sigmoid', epochsConv=1), silent=True).fit(data, silent=True)
        assert net.heads[0].outputUnits == 64
        _, probs = net.predict(data[0].image)
        assert probs.shape == (2, 16, 16)
        np.testing.assert_allclose(probs.sum(axis=0), np.ones((16, 16)), rtol=1e-12,
                                   err_msg='Sigmoid distributions must sum to one.')

    def test_cnn_only(self):
        data = tinyData(4)
        net = dp.Network(tinyConfig(deconvLayers=[]), silent=True).fit(data, silent=True)
        assert [row[0] for row in net.log] == ['conv_sgd']*2 + ['head_sgd']*3
        assert net.heads[0].featureDim == 4*7*7

    def test_module_functions(self):
        data = tinyData(4)
        net = dp.buildNetwork(tinyConfig(epochsConv=1, epochsHead=1), silent=True)
        dp.trainSequential(net, data, silent=True)
        labels, probs = dp.predict(net, data[0].image)
        np.testing.assert_array_equal(labels, net.predict(data[0].image)[0],
                                      err_msg='Module-level predict must match Network.predict.')


class TestSmallScene:
    def test_five_class_accuracy(self):
        train = dp.generateSyntheticScenes(100, 5, 32, seed=11, name='train')
        test = dp.generateSyntheticScenes(30, 5, 32, seed=12, name='test')
        config = dp.NetworkConfig(inputShape=(3, 32, 32), classes=5, convStages=[(8, 5, 2)],
                                  deconvLayers=[dp.DeconvLayerConfig(numMaps=8, filterSize=3, poolRegion=(1, 1, 2),
                                                                     istaIterations=10, inferenceIterations=20)
                                                for _ in range(2)],
                                  patchGrid=(4, 4), seed=0, epochsConv=3, epochsDeconv=2, epochsHead=20, lrHead=0.002)
        assert config.name == 'Deconv-3'
        net = dp.Network(config, silent=True).fit(train, silent=True)
        report = dp.evaluate(net, test)
        assert report.pixelAccuracy >= 0.7, 'Pixel accuracy {:.3f} below 0.7.'.format(report.pixelAccuracy)
