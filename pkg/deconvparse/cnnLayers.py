#!/usr/bin/env python
"""
Supervised building blocks of the hybrid network: convolution stages with rectified-linear units and max pooling,
(inverted) dropout, the fully connected per-pixel classifier head, pixel-wise cross entropy and plain stochastic
gradient descent. All blocks come with backward passes, so that they can be trained by SGD.
"""

from __future__ import division, print_function
import numpy as np
from scipy.special import softmax, expit
from .tensorCore import asMaps, asBank, correlateBank, convolveBank, filterGradient
from .deconvLayer import pool, unpool
from .helper import asRandomState
from .exceptions import ConfigurationError, DimensionError, ParameterError, LabelError

# probabilities are clamped to [PROB_FLOOR, 1] before taking logarithms
PROB_FLOOR = 1e-12


class ConvStageParams(object):
    """
    Parameters of one convolution stage: filters, biases and a 2D pooling region.

    Args:
        filters: Array of shape [K_out, K_in, h, w]
        biases: Array of shape [K_out]
        pool: Spatial pooling region (int or tuple of height and width)
    """
    def __init__(self, filters, biases, pool=2):
        self.filters = asBank(filters).copy()
        self.biases = np.asarray(biases, dtype=np.float64).copy()
        if np.ndim(pool) == 0:
            pool = (pool, pool)
        self.pool = tuple(int(p) for p in pool)
        if self.biases.shape != (self.filters.shape[0],):
            raise DimensionError('Conv stage with {} maps needs {} biases, got shape {}.'.format(
                self.filters.shape[0], self.filters.shape[0], self.biases.shape))

    @classmethod
    def initialize(cls, numMaps, inputMaps, kernel, pool, rng):
        """
        Creates a stage with He-initialized filters and zero biases.

        Args:
            numMaps(int): Number of output maps
            inputMaps(int): Number of input maps
            kernel(int): Kernel extent
            pool(int): Pooling extent
            rng: Seed or numpy RandomState

        Returns:
            ConvStageParams
        """
        rng = asRandomState(rng)
        std = np.sqrt(2./(inputMaps*kernel*kernel))
        return cls(rng.normal(0., std, size=(numMaps, inputMaps, kernel, kernel)), np.zeros(numMaps), pool)

    @property
    def region(self):
        return self.pool + (1,)

    @property
    def parameterCount(self):
        return self.filters.size + self.biases.size

    def copy(self):
        return ConvStageParams(self.filters, self.biases, self.pool)


class HeadParams(object):
    """
    Fully connected classifier head predicting one class distribution per pixel of a patch. Every output unit has its
    own weights, i.e. each pixel has a separate classifier.

    Args:
        weights: Array of shape [output units, feature dimension]
        biases: Array of shape [output units]
        patchShape(tuple): Height and width of the predicted patch
        classes(int): Number of classes C
        mode(str): 'softmax' (patch pixels x C output units) or 'sigmoid' (patch pixels output units, C=2)
    """
    def __init__(self, weights, biases, patchShape, classes, mode='softmax'):
        if mode not in ('softmax', 'sigmoid'):
            raise ConfigurationError('Unknown head mode "{}". Use "softmax" or "sigmoid".'.format(mode))
        if mode == 'sigmoid' and classes != 2:
            raise ConfigurationError('Sigmoid heads predict two classes, got {}.'.format(classes))
        self.weights = np.asarray(weights, dtype=np.float64).copy()
        self.biases = np.asarray(biases, dtype=np.float64).copy()
        self.patchShape = tuple(int(s) for s in patchShape)
        self.classes = int(classes)
        self.mode = mode
        self.history = []

        if self.weights.ndim != 2 or self.weights.shape[0] != self.outputUnits or \
                self.biases.shape != (self.outputUnits,):
            raise DimensionError('Head for patch {} with {} classes ({}) needs {} output units, got weights of '
                                 'shape {} and biases of shape {}.'.format(self.patchShape, self.classes, self.mode,
                                                                           self.outputUnits, self.weights.shape,
                                                                           self.biases.shape))

    @classmethod
    def initialize(cls, featureDim, patchShape, classes, mode, rng, std=0.01):
        rng = asRandomState(rng)
        units = int(np.prod(patchShape))*(classes if mode == 'softmax' else 1)
        return cls(rng.normal(0., std, size=(units, featureDim)), np.zeros(units), patchShape, classes, mode)

    @property
    def outputUnits(self):
        return int(np.prod(self.patchShape))*(self.classes if self.mode == 'softmax' else 1)

    @property
    def featureDim(self):
        return self.weights.shape[1]

    @property
    def logitShape(self):
        return self.patchShape + ((self.classes,) if self.mode == 'softmax' else ())

    @property
    def parameterCount(self):
        return self.weights.size + self.biases.size

    def copy(self):
        return HeadParams(self.weights, self.biases, self.patchShape, self.classes, self.mode)


class DropoutSpec(object):
    """
    Drop probabilities of the three dropout sites: input image, hidden (convolutional) maps and the input of the fully
    connected head.
    """
    def __init__(self, input=0.2, hidden=0.5, fc=0.6975):
        self.input = float(input)
        self.hidden = float(hidden)
        self.fc = float(fc)
        for name, rate in [('input', self.input), ('hidden', self.hidden), ('fc', self.fc)]:
            _checkRate(rate, name)

    def toDict(self):
        return {'input': self.input, 'hidden': self.hidden, 'fc': self.fc}

    def __repr__(self):
        return 'DropoutSpec(input={}, hidden={}, fc={})'.format(self.input, self.hidden, self.fc)


def _checkRate(rate, name='dropout'):
    if not 0. <= rate < 1.:
        raise ParameterError('Drop rate ({}) must lie in [0, 1), got {}.'.format(name, rate))


def relu(x):
    return np.maximum(x, 0.)


def convStageForward(x, params):
    """
    Forward pass of a convolution stage: maxpool(relu(correlate(x, filters) + bias)).

    Args:
        x: Input maps [K_in, H, W]
        params(ConvStageParams): Stage parameters

    Returns:
        tuple: activations [K_out, (H-h+1)/p, (W-w+1)/p] and the SwitchSet of the pooling
    """
    pre = correlateBank(x, params.filters) + params.biases[:, None, None]
    return pool(relu(pre), params.region)


def convStageBackward(x, params, switches, gradOut):
    """
    Backward pass of a convolution stage.

    Args:
        x: Input maps of the forward pass
        params(ConvStageParams): Stage parameters
        switches(SwitchSet): Pooling switches returned by the forward pass
        gradOut: Gradient of the loss with respect to the stage output

    Returns:
        tuple: gradients with respect to the input, the filters and the biases
    """
    x = asMaps(x)
    pre = correlateBank(x, params.filters) + params.biases[:, None, None]
    gradPre = unpool(gradOut, switches)*(pre > 0.)
    return convolveBank(gradPre, params.filters), filterGradient(x, gradPre), gradPre.sum(axis=(1, 2))


def dropoutMask(shape, rate, rng):
    """
    Inverted-dropout mask: every entry is 0 with probability rate and 1/(1-rate) otherwise.
    """
    _checkRate(rate)
    rng = asRandomState(rng)
    return (rng.random_sample(shape) >= rate)/(1. - rate)


def dropoutApply(x, rate, rng, training=True):
    """
    Applies inverted dropout. During training, every element is zeroed independently with probability rate and the
    survivors are scaled by 1/(1-rate), so that evaluation is the identity.

    Args:
        x: Array-like
        rate(float): Drop probability in [0, 1)
        rng: Seed or numpy RandomState
        training(bool): If False, x is returned unchanged

    Returns:
        ndarray
    """
    _checkRate(rate)
    x = np.asarray(x, dtype=np.float64)
    if not training or rate == 0.:
        return x
    return x*dropoutMask(x.shape, rate, rng)


def headLogits(features, params):
    features = np.asarray(features, dtype=np.float64).ravel()
    if features.size != params.featureDim:
        raise DimensionError('Head expects {} features, got {}.'.format(params.featureDim, features.size))
    return (params.weights.dot(features) + params.biases).reshape(params.logitShape)


def probabilities(logits, mode='softmax'):
    """
    Converts head logits to per-pixel class distributions of shape [..., C]. In sigmoid mode, the logit is the score of
    class 1 and the distribution is [1-s, s].
    """
    if mode == 'softmax':
        return softmax(logits, axis=-1)
    s = expit(logits)
    return np.stack([1. - s, s], axis=-1)


def headForward(features, params):
    """
    Forward pass of the fully connected head.

    Args:
        features: Feature tensor (flattened internally)
        params(HeadParams): Head parameters

    Returns:
        ndarray: Class distributions of shape [patch height, patch width, C]
    """
    return probabilities(headLogits(features, params), params.mode)


def headBackward(features, params, gradLogits):
    """
    Backward pass of the fully connected head.

    Args:
        features: Feature tensor of the forward pass
        params(HeadParams): Head parameters
        gradLogits: Gradient of the loss with respect to the logits

    Returns:
        tuple: gradients with respect to the weights, the biases and the features (shape of the features)
    """
    features = np.asarray(features, dtype=np.float64)
    g = np.asarray(gradLogits, dtype=np.float64).ravel()
    gradFeatures = params.weights.T.dot(g).reshape(features.shape)
    return np.outer(g, features.ravel()), g, gradFeatures


def _checkLabels(pred, target):
    target = np.asarray(target)
    if pred.shape[:-1] != target.shape:
        raise DimensionError('Prediction of shape {} does not fit labels of shape {}.'.format(pred.shape,
                                                                                             target.shape))
    if target.size and (target.min() < 0 or target.max() >= pred.shape[-1]):
        raise LabelError('Labels must lie in [0, {}), got range [{}, {}].'.format(pred.shape[-1], target.min(),
                                                                                 target.max()))
    return target.astype(np.int64)


def _pixelWeights(target, weights):
    if weights is None:
        return np.ones(target.shape)
    return np.asarray(weights, dtype=np.float64)[target]


def crossEntropyLoss(pred, target, weights=None):
    """
    Pixel-wise cross entropy: (weighted) mean over pixels of -ln(pred[pixel, target]). Probabilities are clamped to
    [1e-12, 1].

    Args:
        pred: Class distributions of shape [..., C]
        target: Integer labels of shape [...]
        weights: Optional per-class weights of length C

    Returns:
        float
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = _checkLabels(pred, target)
    p = np.clip(np.take_along_axis(pred, target[..., None], axis=-1)[..., 0], PROB_FLOOR, 1.)
    w = _pixelWeights(target, weights)
    return float(np.sum(w*(-np.log(p)))/np.sum(w))


def crossEntropyGradient(pred, target, weights=None, mode='softmax'):
    """
    Gradient of crossEntropyLoss with respect to the logits that produced pred.

    Args:
        pred: Class distributions of shape [..., C]
        target: Integer labels of shape [...]
        weights: Optional per-class weights of length C
        mode(str): 'softmax' (logits of shape [..., C]) or 'sigmoid' (logits of shape [...])

    Returns:
        ndarray: Gradient with the shape of the logits
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = _checkLabels(pred, target)
    w = _pixelWeights(target, weights)
    w = w/np.sum(w)
    if mode == 'sigmoid':
        return w*(pred[..., 1] - target)
    onehot = np.zeros_like(pred)
    np.put_along_axis(onehot, target[..., None], 1., axis=-1)
    return w[..., None]*(pred - onehot)


def localHeadForward(maps, weights, biases):
    """
    Per-location linear softmax classifier on a stack of maps (a 1x1 convolution followed by a softmax over classes).

    Args:
        maps: Maps [K, H, W]
        weights: Array [C, K]
        biases: Array [C]

    Returns:
        ndarray: Class distributions [H, W, C]
    """
    maps = asMaps(maps)
    logits = np.tensordot(maps, weights, axes=([0], [1])) + biases
    return softmax(logits, axis=-1)


def localHeadBackward(maps, weights, gradLogits):
    """
    Backward pass of localHeadForward.

    Returns:
        tuple: gradients with respect to the weights [C, K], the biases [C] and the maps [K, H, W]
    """
    maps = asMaps(maps)
    gradW = np.tensordot(gradLogits, maps, axes=([0, 1], [1, 2]))
    gradB = gradLogits.sum(axis=(0, 1))
    gradMaps = np.tensordot(weights, gradLogits, axes=([0], [2]))
    return gradW, gradB, gradMaps


def sgdStep(params, grads, learningRate):
    """
    Plain gradient-descent update p <- p - lr*g for a list of parameter arrays.

    Args:
        params(list): Parameter arrays (or a single array)
        grads(list): Gradients of the same shapes
        learningRate(float): Step size

    Returns:
        list: Updated parameter arrays (a single array if a single array was passed)
    """
    single = isinstance(params, np.ndarray)
    if single:
        params, grads = [params], [grads]
    if len(params) != len(grads):
        raise DimensionError('Got {} parameter arrays but {} gradients.'.format(len(params), len(grads)))

    updated = []
    for p, g in zip(params, grads):
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if p.shape != g.shape:
            raise DimensionError('Parameter of shape {} does not fit gradient of shape {}.'.format(p.shape, g.shape))
        updated.append(p - learningRate*g)
    return updated[0] if single else updated
