#!/usr/bin/env python
"""
The hybrid network stacks supervised convolution stages (trained by SGD) and unsupervised deconvolutional layers
(trained by ISTA inference and conjugate-gradient filter updates), topped by fully connected per-pixel classifiers, one
per patch of the multi-patch grid. Training is sequential: first the convolution stages together with a temporary
per-location classifier, then the deconvolutional layers bottom-up on the outputs of the convolution stages, and
finally the classifier heads on the pooled top-layer feature maps.
"""

from __future__ import division, print_function
import re
import itertools
import numpy as np
import matplotlib.pyplot as plt
from .tensorCore import asMaps
from .deconvLayer import DeconvLayerConfig, inferStack, trainDeconvLayer
from .cnnLayers import ConvStageParams, DropoutSpec, convStageForward, convStageBackward, dropoutApply, \
    dropoutMask, headForward, localHeadForward, localHeadBackward, crossEntropyLoss, crossEntropyGradient, sgdStep
from .multiPatch import makeGrid, assemblePrediction, initializeHeads, trainMultiPatch
from .preprocessing import channelStats, standardize, localContrastNormalize, classWeights, subsampleLabels, \
    STD_FLOOR
from .helper import deriveSeed, progress, createColormap, tileMontage
from .exceptions import ConfigurationError, DimensionError, NumericalError, GridError


DECONV_TARGETS = ('features', 'image')


def defaultDeconvLayers():
    """
    Three deconvolutional layers with 32 maps of 3x3 filters each, pooled over pairs of adjacent maps only. On the
    13x13 conv output of the default geometry the maps shrink to 11x11, 9x9 and 7x7 through the filter borders alone;
    odd map sizes leave no room for spatial pooling.
    """
    return [DeconvLayerConfig(numMaps=32, filterSize=3, poolRegion=(1, 1, 2)) for _ in range(3)]


class NetworkConfig(object):
    """
    Specification of a hybrid network and its training schedule.

    Args:
        inputShape(tuple): Image shape [channels, H, W]
        classes(int): Number of classes C
        convStages(list): One tuple (maps, kernel, pool) per convolution stage
        deconvLayers(list): One DeconvLayerConfig (or dict) per deconvolutional layer
        headMode(str): 'softmax' or 'sigmoid' (two classes only)
        patchGrid(tuple): Rows and columns (m, n) of the multi-patch grid
        sharedTrunk(bool): If True, all patch heads share one convolutional/deconvolutional trunk
        seed(int): Base seed of all random streams
        epochsConv(int): Epochs of stage 1 (convolution stages)
        epochsDeconv(int): Epochs of stage 2 (per deconvolutional layer)
        epochsHead(int): Epochs of stage 3 (classifier heads)
        lrConv(float): SGD learning rate of stage 1
        lrHead(float): SGD learning rate of stage 3
        dropout: DropoutSpec (or dict) with drop rates of input, hidden maps and head input
        balanceClasses(bool): If True, losses are weighted by inverse class frequencies
        standardizeMode(str): 'dataset' or 'image' standardization of the input
        lcnWindow(int): Window of the local contrast normalization (0 disables it)
        deconvTarget(str): Reconstruction target of the deconvolutional layers: 'features' (output of the last
            convolution stage) or 'image' (the preprocessed image; the head input then joins the conv output and the
            pooled top deconvolutional maps)
        name(str): Variant name (default: 'Deconv-k' or 'CNN-k' with k the number of feature layers)
    """
    def __init__(self, inputShape=(3, 64, 64), classes=5, convStages=((16, 5, 2), (32, 5, 2)), deconvLayers=None,
                 headMode='softmax', patchGrid=(4, 4), sharedTrunk=True, seed=0, epochsConv=5, epochsDeconv=3,
                 epochsHead=10, lrConv=0.01, lrHead=0.005, dropout=None, balanceClasses=True,
                 standardizeMode='dataset', lcnWindow=9, deconvTarget='features', name=None):
        self.inputShape = tuple(int(s) for s in inputShape)
        self.classes = int(classes)
        self.convStages = [tuple(int(v) for v in stage) for stage in convStages]
        if deconvLayers is None:
            deconvLayers = defaultDeconvLayers()
        self.deconvLayers = [cfg if isinstance(cfg, DeconvLayerConfig) else DeconvLayerConfig(**cfg)
                             for cfg in deconvLayers]
        self.headMode = headMode
        self.patchGrid = tuple(int(p) for p in patchGrid)
        self.sharedTrunk = bool(sharedTrunk)
        self.seed = int(seed)
        self.epochsConv = int(epochsConv)
        self.epochsDeconv = int(epochsDeconv)
        self.epochsHead = int(epochsHead)
        self.lrConv = float(lrConv)
        self.lrHead = float(lrHead)
        if dropout is None:
            dropout = DropoutSpec()
        self.dropout = dropout if isinstance(dropout, DropoutSpec) else DropoutSpec(**dropout)
        self.balanceClasses = bool(balanceClasses)
        self.standardizeMode = standardizeMode
        self.lcnWindow = int(lcnWindow)
        self.deconvTarget = deconvTarget
        self.name = name if name is not None else self.defaultName()

        if len(self.inputShape) != 3 or min(self.inputShape) < 1:
            raise ConfigurationError('Input shape must be [channels, H, W], got {}.'.format(self.inputShape))
        if self.classes < 2:
            raise ConfigurationError('At least two classes are needed, got {}.'.format(self.classes))
        if self.headMode not in ('softmax', 'sigmoid'):
            raise ConfigurationError('Unknown head mode "{}".'.format(self.headMode))
        if self.headMode == 'sigmoid' and self.classes != 2:
            raise ConfigurationError('Sigmoid heads need exactly two classes, got {}.'.format(self.classes))
        if any(len(stage) != 3 or min(stage) < 1 for stage in self.convStages):
            raise ConfigurationError('Conv stages must be given as positive (maps, kernel, pool) triples.')
        if min(self.epochsConv, self.epochsDeconv, self.epochsHead) < 0:
            raise ConfigurationError('Numbers of epochs must be non-negative.')
        if self.standardizeMode not in ('dataset', 'image'):
            raise ConfigurationError('Unknown standardization mode "{}".'.format(self.standardizeMode))
        if self.deconvTarget not in DECONV_TARGETS:
            raise ConfigurationError('Unknown deconvolutional target "{}". Use one of {}.'.format(
                self.deconvTarget, ', '.join(DECONV_TARGETS)))
        if self.lcnWindow != 0 and (self.lcnWindow < 3 or self.lcnWindow % 2 == 0):
            raise ConfigurationError('LCN window must be 0 or an odd integer >= 3, got {}.'.format(self.lcnWindow))
        if len(self.patchGrid) != 2:
            raise ConfigurationError('Patch grid must consist of two integers, got {}.'.format(self.patchGrid))

        self.layerShapes()
        try:
            makeGrid(self.inputShape[1:], *self.patchGrid)
        except GridError as e:
            raise ConfigurationError(str(e))

    def defaultName(self):
        if self.deconvLayers:
            return 'Deconv-{}'.format(len(self.convStages) + len(self.deconvLayers))
        return 'CNN-{}'.format(len(self.convStages))

    def layerShapes(self):
        """
        Output shapes of all layers of a trunk.

        Returns:
            list: Tuples (layer name, shape [maps, H, W]), starting with the input
        """
        C, H, W = self.inputShape
        shapes = [('input', (C, H, W))]
        for i, (maps, kernel, p) in enumerate(self.convStages, 1):
            H, W = H - kernel + 1, W - kernel + 1
            if H < 1 or W < 1 or H % p or W % p:
                raise ConfigurationError('Conv stage {} ({}x{} kernel, pool {}) does not fit its input of shape '
                                         '{}.'.format(i, kernel, kernel, p, shapes[-1][1]))
            C, H, W = maps, H // p, W // p
            shapes.append(('conv{}'.format(i), (C, H, W)))

        if self.deconvTarget == 'image':
            C, H, W = self.inputShape

        for i, cfg in enumerate(self.deconvLayers, 1):
            h, w = cfg.filterSize
            rh, rw, rd = cfg.poolRegion
            below = (C, H, W)
            H, W = H - h + 1, W - w + 1
            if H < 1 or W < 1 or H % rh or W % rw:
                raise ConfigurationError('Deconv layer {} ({}x{} filters, pool {}) does not fit its input of shape '
                                         '{}.'.format(i, h, w, cfg.poolRegion, below))
            C, H, W = cfg.numMaps // rd, H // rh, W // rw
            shapes.append(('deconv{}'.format(i), (C, H, W)))
        return shapes

    @property
    def featureShape(self):
        """Shape of the top maps of a trunk."""
        return self.layerShapes()[-1][1]

    @property
    def featureDim(self):
        shapes = self.layerShapes()
        dim = int(np.prod(shapes[-1][1]))
        if self.deconvTarget == 'image' and self.deconvLayers and self.convStages:
            dim += int(np.prod(shapes[len(self.convStages)][1]))
        return dim

    @property
    def layerCount(self):
        """Number of layers, counting the fully connected layer and the classifier."""
        return len(self.convStages) + len(self.deconvLayers) + 2

    @property
    def patchCount(self):
        return self.patchGrid[0]*self.patchGrid[1]

    def trunkParameterCount(self):
        count = 0
        inputMaps = self.inputShape[0]
        for maps, kernel, _ in self.convStages:
            count += maps*inputMaps*kernel*kernel + maps
            inputMaps = maps
        if self.deconvTarget == 'image':
            inputMaps = self.inputShape[0]
        for cfg in self.deconvLayers:
            count += cfg.numMaps*inputMaps*cfg.filterSize[0]*cfg.filterSize[1]
            inputMaps = cfg.pooledMaps
        return count

    def headParameterCount(self):
        H, W = self.inputShape[1:]
        units = (H // self.patchGrid[0])*(W // self.patchGrid[1])*(self.classes if self.headMode == 'softmax' else 1)
        return units*(self.featureDim + 1)

    def parameterCount(self):
        """
        Total number of trainable parameters: trunk(s) plus one head per patch.
        """
        trunks = 1 if self.sharedTrunk else self.patchCount
        return trunks*self.trunkParameterCount() + self.patchCount*self.headParameterCount()

    def copy(self, **changes):
        """
        Returns a copy of the configuration with some attributes replaced. If the layer stack changes and no name is
        given, the default name of the new stack is used.
        """
        d = {'inputShape': self.inputShape,
             'classes': self.classes,
             'convStages': list(self.convStages),
             'deconvLayers': [cfg.copy() for cfg in self.deconvLayers],
             'headMode': self.headMode,
             'patchGrid': self.patchGrid,
             'sharedTrunk': self.sharedTrunk,
             'seed': self.seed,
             'epochsConv': self.epochsConv,
             'epochsDeconv': self.epochsDeconv,
             'epochsHead': self.epochsHead,
             'lrConv': self.lrConv,
             'lrHead': self.lrHead,
             'dropout': DropoutSpec(**self.dropout.toDict()),
             'balanceClasses': self.balanceClasses,
             'standardizeMode': self.standardizeMode,
             'lcnWindow': self.lcnWindow,
             'deconvTarget': self.deconvTarget,
             'name': self.name}
        if ('convStages' in changes or 'deconvLayers' in changes) and 'name' not in changes:
            d['name'] = None
        d.update(changes)
        return NetworkConfig(**d)

    def _replacementStages(self, count):
        # conv stages replacing the first `count` deconv layers with the same output geometry; the widths of all but
        # the last stage are chosen to match the parameter count of the replaced deconv layers
        stages = []
        for cfg in self.deconvLayers[:count]:
            h, w = cfg.filterSize
            rh, rw, _ = cfg.poolRegion
            if h != w or rh != rw:
                raise ConfigurationError('Only square filters and pooling regions can be replaced by conv stages.')
            stages.append((h, rh))

        inputMaps = self.convStages[-1][0] if self.convStages else self.inputShape[0]
        target = 0
        maps = inputMaps
        for cfg in self.deconvLayers[:count]:
            target += cfg.numMaps*maps*cfg.filterSize[0]*cfg.filterSize[1]
            maps = cfg.pooledMaps
        lastWidth = self.deconvLayers[count-1].pooledMaps

        def params(widths):
            total, cin = 0, inputMaps
            for (kernel, _), m in zip(stages, widths):
                total += m*cin*kernel*kernel + m
                cin = m
            return total

        free = count - 1
        maxWidth = 4*max(cfg.numMaps for cfg in self.deconvLayers[:count])
        if free == 0:
            widths = (lastWidth,)
        elif free <= 2:
            candidates = itertools.product(range(1, maxWidth + 1), repeat=free)
            widths = min((c + (lastWidth,) for c in candidates), key=lambda c: abs(params(c) - target))
        else:
            widths = min(((m,)*free + (lastWidth,) for m in range(1, maxWidth + 1)),
                         key=lambda c: abs(params(c) - target))
        return [(m, kernel, p) for m, (kernel, p) in zip(widths, stages)]

    def variant(self, name):
        """
        Derives an ablation variant from this (full) configuration.

        'Deconv-k' keeps the convolution stages and the first k-c deconvolutional layers (c = number of convolution
        stages). 'CNN-k' replaces the first k-c deconvolutional layers by convolution stages with the same kernel
        size, spatial pooling and output geometry and (as far as possible) the same number of parameters. 'CNN-c' and
        'Deconv-c' both denote the network without any deconvolutional layer.

        Args:
            name(str): Variant name

        Returns:
            NetworkConfig
        """
        match = re.match(r'^(Deconv|CNN)-(\d+)$', name)
        if match is None:
            raise ConfigurationError('Unknown variant "{}". Use "Deconv-k" or "CNN-k".'.format(name))
        kind, depth = match.group(1), int(match.group(2))
        nConv = len(self.convStages)
        extra = depth - nConv
        if extra < 0 or extra > len(self.deconvLayers):
            raise ConfigurationError('Variant "{}" needs {} deconvolutional layers, configuration has {}.'.format(
                name, extra, len(self.deconvLayers)))

        if extra == 0:
            return self.copy(deconvLayers=[], name='CNN-{}'.format(nConv))
        if kind == 'Deconv':
            return self.copy(deconvLayers=[cfg.copy() for cfg in self.deconvLayers[:extra]], name=name)
        if self.deconvTarget == 'image':
            raise ConfigurationError('Variant "{}" replaces deconvolutional layers by conv stages, which needs the '
                                     'deconvolutional target "features".'.format(name))
        return self.copy(convStages=self.convStages + self._replacementStages(extra), deconvLayers=[], name=name)

    def toDict(self):
        """
        Returns:
            dict: JSON-compatible representation
        """
        return {'inputShape': list(self.inputShape),
                'classes': self.classes,
                'convStages': [list(stage) for stage in self.convStages],
                'deconvLayers': [cfg.toDict() for cfg in self.deconvLayers],
                'headMode': self.headMode,
                'patchGrid': list(self.patchGrid),
                'sharedTrunk': self.sharedTrunk,
                'seed': self.seed,
                'epochsConv': self.epochsConv,
                'epochsDeconv': self.epochsDeconv,
                'epochsHead': self.epochsHead,
                'lrConv': self.lrConv,
                'lrHead': self.lrHead,
                'dropout': self.dropout.toDict(),
                'balanceClasses': self.balanceClasses,
                'standardizeMode': self.standardizeMode,
                'lcnWindow': self.lcnWindow,
                'deconvTarget': self.deconvTarget,
                'name': self.name}

    @classmethod
    def fromDict(cls, d):
        return cls(**d)

    def __repr__(self):
        return 'NetworkConfig(name={!r}, layers={}, parameters={})'.format(self.name, self.layerCount,
                                                                          self.parameterCount())


class Trunk(object):
    """
    Convolution stages and deconvolutional layers computing the features that the classifier heads consume.

    Args:
        config(NetworkConfig): Network configuration
        index(int): Index of the trunk (0 for a shared trunk, the patch index otherwise); selects the random streams
    """
    def __init__(self, config, index=0):
        self.config = config
        self.index = int(index)
        rng = np.random.RandomState(deriveSeed(config.seed, 1, self.index))
        self.convStages = []
        inputMaps = config.inputShape[0]
        for maps, kernel, p in config.convStages:
            self.convStages.append(ConvStageParams.initialize(maps, inputMaps, kernel, p, rng))
            inputMaps = maps
        self.deconvBanks = []
        self.featureMean = None
        self.featureStd = None

    @property
    def featureDim(self):
        return self.config.featureDim

    @property
    def trained(self):
        return self.featureMean is not None

    def convForward(self, image, rng=None):
        """
        Forward pass through all convolution stages. If a random state is given, dropout is applied to the input and to
        the output of every stage (training mode).

        Returns:
            tuple: output maps and a cache (stage inputs, switches, dropout masks) for the backward pass
        """
        x = asMaps(image)
        if rng is not None:
            x = dropoutApply(x, self.config.dropout.input, rng)
        inputs, switches, masks = [], [], []
        for stage in self.convStages:
            inputs.append(x)
            x, s = convStageForward(x, stage)
            switches.append(s)
            mask = dropoutMask(x.shape, self.config.dropout.hidden, rng) if rng is not None else None
            if mask is not None:
                x = x*mask
            masks.append(mask)
        return x, (inputs, switches, masks)

    def fitConv(self, dataset, log=None, silent=False):
        """
        Stage 1: trains the convolution stages by SGD together with a temporary per-location softmax classifier on top
        of the last stage. The classifier predicts the label map subsampled to the resolution of the top maps and is
        discarded afterwards.
        """
        if not self.convStages:
            return
        cfg = self.config
        rng = np.random.RandomState(deriveSeed(cfg.seed, 2, self.index))
        topShape = cfg.layerShapes()[len(self.convStages)][1]
        C = dataset.classes
        V = rng.normal(0., 0.01, size=(C, topShape[0]))
        b = np.zeros(C)
        targets = [subsampleLabels(s.labels, topShape[1:]) for s in dataset]
        weights = classWeights(dataset.labels, C) if cfg.balanceClasses else None

        if not silent:
            print('+ Training {} conv stage(s) by SGD.'.format(len(self.convStages)))
        for epoch in progress(range(1, cfg.epochsConv + 1), silent=silent, desc='conv'):
            losses = []
            for i in rng.permutation(len(dataset)):
                top, (inputs, switches, masks) = self.convForward(dataset[i].image, rng)
                probs = localHeadForward(top, V, b)
                losses.append(crossEntropyLoss(probs, targets[i], weights))

                gradV, gradB, grad = localHeadBackward(top, V, crossEntropyGradient(probs, targets[i], weights))
                params, grads = [V, b], [gradV, gradB]
                for j in reversed(range(len(self.convStages))):
                    grad, gradF, gradBias = convStageBackward(inputs[j], self.convStages[j], switches[j],
                                                              grad*masks[j])
                    params += [self.convStages[j].filters, self.convStages[j].biases]
                    grads += [gradF, gradBias]

                params = sgdStep(params, grads, cfg.lrConv)
                V, b = params[:2]
                for j, k in zip(reversed(range(len(self.convStages))), range(2, len(params), 2)):
                    self.convStages[j].filters, self.convStages[j].biases = params[k], params[k+1]

            meanLoss = float(np.mean(losses))
            if not np.isfinite(meanLoss):
                raise NumericalError('Non-finite training loss in conv epoch {} (trunk {}).'.format(epoch, self.index))
            if log is not None:
                log.append(('conv_sgd', '', epoch, meanLoss, ''))
            if not silent:
                print('    + Epoch {}: mean loss {:.6g}'.format(epoch, meanLoss))

    def fitDeconv(self, dataset, log=None, silent=False):
        """
        Stage 2: trains the deconvolutional layers bottom-up on their reconstruction target: the outputs of the (fixed)
        convolution stages or the preprocessed images.
        """
        cfg = self.config
        maps = [self.deconvInput(s.image) for s in dataset]
        self.deconvBanks = []
        for l, layerConfig in enumerate(cfg.deconvLayers, 1):
            records = []
            bank = trainDeconvLayer(maps, self.deconvBanks, l, layerConfig, cfg.epochsDeconv,
                                    deriveSeed(cfg.seed, 3, self.index, l), lowerConfigs=cfg.deconvLayers[:l-1],
                                    log=records, silent=silent)
            self.deconvBanks.append(bank)
            if log is not None:
                log.extend(('deconv_ista', layer, epoch, cost, nnz) for epoch, layer, cost, nnz in records)

    def deconvInput(self, image):
        if self.config.deconvTarget == 'image':
            return asMaps(image)
        return self.convForward(image)[0]

    def rawFeatures(self, image):
        """
        Unstandardized feature vector of a (preprocessed) image: the pooled feature maps of the top deconvolutional
        layer, or the output of the last convolution stage if there are no deconvolutional layers. If the
        deconvolutional layers reconstruct the image, the output of the last convolution stage is prepended.
        """
        maps = self.convForward(image)[0]
        if not self.deconvBanks:
            return maps.ravel()
        target = asMaps(image) if self.config.deconvTarget == 'image' else maps
        top = inferStack(target, self.deconvBanks, self.config.deconvLayers, inference=True)[-1].pooled.ravel()
        if self.config.deconvTarget == 'image' and self.convStages:
            return np.concatenate([maps.ravel(), top])
        return top

    def fit(self, dataset, log=None, silent=False):
        """
        Trains the trunk (stages 1 and 2) and computes the feature statistics used to standardize the head input.

        Returns:
            ndarray: Standardized feature matrix [N, D] of the training set
        """
        self.fitConv(dataset, log=log, silent=silent)
        self.fitDeconv(dataset, log=log, silent=silent)
        raw = np.stack([self.rawFeatures(s.image) for s in dataset])
        self.featureMean = raw.mean(axis=0)
        self.featureStd = np.maximum(raw.std(axis=0), STD_FLOOR)
        return (raw - self.featureMean)/self.featureStd

    def features(self, image):
        if not self.trained:
            raise ConfigurationError('Trunk has not been trained yet.')
        return (self.rawFeatures(image) - self.featureMean)/self.featureStd

    def featureMatrix(self, dataset):
        return np.stack([self.features(s.image) for s in dataset])

    def filters(self, layer):
        """
        Filters of a layer of the trunk; layers 1..c are the convolution stages, the following ones the
        deconvolutional layers.
        """
        nConv = len(self.convStages)
        if 1 <= layer <= nConv:
            return self.convStages[layer-1].filters
        if nConv < layer <= nConv + len(self.deconvBanks):
            return self.deconvBanks[layer-nConv-1].filters
        raise ConfigurationError('Trunk has no layer {} (layers 1-{}).'.format(layer, nConv + len(self.deconvBanks)))


class Network(object):
    """
    Hybrid convolutional/deconvolutional scene-parsing network with one classifier head per patch.

    Args:
        config(NetworkConfig): Network configuration
        silent(bool): If set to True, no output is generated.

    Example:
    ::
        train = dp.generateSyntheticScenes(200, 5, 64, seed=1)
        net = dp.Network(dp.NetworkConfig())
        net.fit(train)
        labels, probs = net.predict(train[0].image)
    """
    def __init__(self, config, silent=False):
        self.config = config
        self.grid = makeGrid(config.inputShape[1:], *config.patchGrid)
        self.trunks = [Trunk(config, i) for i in range(1 if config.sharedTrunk else self.grid.count)]
        self.heads = initializeHeads(config.featureDim, self.grid, config.classes, config.headMode, config.seed)
        self.log = []
        self.inputMean = None
        self.inputStd = None
        self.validationPixelAcc = None
        self.trained = False

        if not silent:
            print('+ Created network "{}" with {} layers and {} parameters.'.format(config.name, self.layerCount,
                                                                                    self.parameterCount))

    @property
    def layerCount(self):
        return self.config.layerCount

    @property
    def parameterCount(self):
        return self.config.parameterCount()

    def preprocess(self, dataset):
        """
        Standardizes a training set (storing the statistics for later use by prepare) and applies local contrast
        normalization.

        Returns:
            SceneDataset
        """
        if self.config.standardizeMode == 'dataset':
            self.inputMean, self.inputStd = channelStats(dataset)
        out = standardize(dataset, self.config.standardizeMode, self.inputMean, self.inputStd)
        if self.config.lcnWindow:
            out = out.withImages([localContrastNormalize(s.image, self.config.lcnWindow) for s in out])
        return out

    def prepare(self, image):
        """
        Applies the stored standardization and the local contrast normalization to a raw image.
        """
        image = asMaps(image)
        if self.config.standardizeMode == 'dataset' and self.inputMean is None:
            raise ConfigurationError('Network "{}" has no stored standardization statistics.'.format(
                self.config.name))
        image = standardize(image[None], self.config.standardizeMode, self.inputMean, self.inputStd)[0]
        if self.config.lcnWindow:
            image = localContrastNormalize(image, self.config.lcnWindow)
        return image

    def _checkGeometry(self, shape):
        if tuple(shape) != self.config.inputShape:
            raise DimensionError('Network "{}" expects images of shape {}, got {}.'.format(self.config.name,
                                                                                       self.config.inputShape,
                                                                                       tuple(shape)))

    def fit(self, dataset, preprocess=True, silent=False):
        """
        Sequential training: conv stages by SGD, deconvolutional layers by ISTA/CG, classifier heads by SGD. The
        sequence of stages is recorded in the attribute 'log' as rows (stage, layer, epoch, mean_loss,
        mean_nnz_fraction).

        Args:
            dataset(SceneDataset): Training set (raw images if preprocess is True)
            preprocess(bool): If True, standardization and LCN are applied first
            silent(bool): If set to True, no output is generated.

        Returns:
            Network: self
        """
        self._checkGeometry(dataset.shape)
        if dataset.classes != self.config.classes:
            raise ConfigurationError('Network predicts {} classes, dataset has {}.'.format(self.config.classes,
                                                                                          dataset.classes))
        if not silent:
            print('+ Training network "{}" on {} samples.'.format(self.config.name, len(dataset)))
        if preprocess:
            dataset = self.preprocess(dataset)

        self.log = []
        self.trunks, self.heads = trainMultiPatch(dataset, lambda i: self.trunks[i], self.grid, self.config,
                                                  heads=self.heads, log=self.log, silent=silent)
        self.trained = True
        if not silent:
            print('+ Finished training.')
        return self

    def predict(self, image, preprocess=True):
        """
        Predicts the label map of an image.

        Args:
            image: Image of the training geometry [channels, H, W]
            preprocess(bool): If True, the stored standardization and LCN are applied first

        Returns:
            tuple: label map [H, W] and class probabilities [C, H, W]
        """
        if not self.trained:
            raise ConfigurationError('Network "{}" has not been trained yet.'.format(self.config.name))
        image = asMaps(image)
        self._checkGeometry(image.shape)
        if preprocess:
            image = self.prepare(image)

        features = [trunk.features(image) for trunk in self.trunks]
        patches = [headForward(features[0 if self.config.sharedTrunk else k], head).transpose(2, 0, 1)
                   for k, head in enumerate(self.heads)]
        probs = assemblePrediction(patches, self.grid)
        return np.argmax(probs, axis=0), probs

    def filters(self, layer, trunk=0):
        return self.trunks[trunk].filters(layer)

    def plotFilters(self, layer, trunk=0, **kwargs):
        """
        Displays the filters of a layer as a montage, every filter normalized independently.

        Args:
            layer(int): Layer index (1..c: conv stages, c+1..: deconvolutional layers)
            trunk(int): Trunk index (only relevant for independent per-patch trunks)
            **kwargs: All further keyword-arguments are passed to the imshow function of matplotlib.
        """
        montage = tileMontage(self.filters(layer, trunk))
        plt.imshow(montage.transpose(1, 2, 0), interpolation='nearest', **kwargs)
        plt.axis('off')
        plt.title('{}: layer {}'.format(self.config.name, layer))

    def plotHeatmap(self, image, classIndex, color='b', preprocess=True, **kwargs):
        """
        Displays the predicted probability of one class at every pixel.

        Args:
            image: Image of the training geometry
            classIndex(int): Class to display
            color: Matplotlib color of probability 1
            preprocess(bool): If True, the stored standardization and LCN are applied first
            **kwargs: All further keyword-arguments are passed to the imshow function of matplotlib.
        """
        probs = self.predict(image, preprocess=preprocess)[1]
        if not 0 <= classIndex < probs.shape[0]:
            raise ConfigurationError('Class index {} out of range (0-{}).'.format(classIndex, probs.shape[0] - 1))
        plt.imshow(probs[classIndex], cmap=createColormap(color), vmin=0., vmax=1., **kwargs)
        plt.colorbar()
        plt.title('p(class {})'.format(classIndex))


def buildNetwork(config, silent=False):
    """
    Creates a network with seeded parameters.
    """
    return Network(config, silent=silent)


def trainSequential(network, dataset, preprocess=True, silent=False):
    """
    Trains a network with the sequential SGD/ISTA/SGD schedule. See Network.fit.
    """
    return network.fit(dataset, preprocess=preprocess, silent=silent)


def predict(network, image, preprocess=True):
    """
    Label map and class probabilities of an image. See Network.predict.
    """
    return network.predict(image, preprocess=preprocess)
