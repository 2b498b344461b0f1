#!/usr/bin/env python
"""
Multi-patch training splits the output label image into an m x n grid of disjoint patches and trains a dedicated
classifier head for every patch. Each head sees the features of the entire input image, but predicts only the pixels
of its own patch, so that it can learn the spatial prior of its location. Patches are numbered in row-major order.
"""

from __future__ import division, print_function
import numpy as np
from .cnnLayers import HeadParams, headForward, headBackward, crossEntropyLoss, crossEntropyGradient, dropoutApply, \
    sgdStep
from .preprocessing import classWeights
from .helper import deriveSeed, progress
from .exceptions import GridError


class PatchGrid(object):
    """
    Partition of an H x W label image into rows x cols patches of equal size.
    """
    def __init__(self, rows, cols, height, width):
        self.rows = int(rows)
        self.cols = int(cols)
        self.height = int(height)
        self.width = int(width)

    @property
    def patchHeight(self):
        return self.height // self.rows

    @property
    def patchWidth(self):
        return self.width // self.cols

    @property
    def patchShape(self):
        return self.patchHeight, self.patchWidth

    @property
    def count(self):
        return self.rows*self.cols

    def slices(self, index):
        """
        Returns:
            tuple: row slice and column slice of the patch with the given row-major index
        """
        if not 0 <= index < self.count:
            raise GridError('Patch index {} is out of range for a {}x{} grid.'.format(index, self.rows, self.cols))
        r, c = divmod(index, self.cols)
        return (slice(r*self.patchHeight, (r+1)*self.patchHeight),
                slice(c*self.patchWidth, (c+1)*self.patchWidth))

    def __eq__(self, other):
        return isinstance(other, PatchGrid) and (self.rows, self.cols, self.height, self.width) == \
            (other.rows, other.cols, other.height, other.width)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'PatchGrid({}x{} patches of {}x{} pixels)'.format(self.rows, self.cols, self.patchHeight,
                                                                 self.patchWidth)


def makeGrid(labelShape, m, n):
    """
    Creates an m x n patch grid for label images of the given shape.

    Args:
        labelShape(tuple): (H, W)
        m(int): Number of patch rows
        n(int): Number of patch columns

    Returns:
        PatchGrid
    """
    H, W = (int(s) for s in labelShape)
    if m < 1 or n < 1:
        raise GridError('Patch grid needs at least one row and column, got {}x{}.'.format(m, n))
    if H % m or W % n:
        raise GridError('Label image of shape {}x{} cannot be divided into {}x{} equal patches.'.format(H, W, m, n))
    return PatchGrid(m, n, H, W)


def splitLabels(labels, grid):
    """
    Splits a map (label map or any array whose last two axes are H and W) into the patches of a grid.

    Args:
        labels: Array [..., H, W]
        grid(PatchGrid): Patch grid

    Returns:
        list: grid.count arrays [..., H/m, W/n] in row-major order
    """
    labels = np.asarray(labels)
    if labels.shape[-2:] != (grid.height, grid.width):
        raise GridError('Map of shape {} does not fit grid for {}x{} images.'.format(labels.shape, grid.height,
                                                                                     grid.width))
    return [labels[(Ellipsis,) + grid.slices(k)] for k in range(grid.count)]


def assemblePrediction(patches, grid):
    """
    Tiles patch outputs (in row-major order) into a full map. Inverse of splitLabels.

    Args:
        patches(list): grid.count arrays [..., H/m, W/n]
        grid(PatchGrid): Patch grid

    Returns:
        ndarray: Array [..., H, W]
    """
    patches = [np.asarray(p) for p in patches]
    if len(patches) != grid.count:
        raise GridError('Grid with {} patches got {} patch outputs.'.format(grid.count, len(patches)))
    lead = patches[0].shape[:-2]
    for p in patches:
        if p.shape != lead + grid.patchShape:
            raise GridError('Patch output of shape {} does not fit patch shape {}.'.format(p.shape, grid.patchShape))

    out = np.empty(lead + (grid.height, grid.width), dtype=np.result_type(*patches))
    for k, p in enumerate(patches):
        out[(Ellipsis,) + grid.slices(k)] = p
    return out


def headLoss(head, features, targets, weights=None):
    """
    Mean cross entropy of a head over a set of samples (evaluation mode, no dropout).
    """
    return float(np.mean([crossEntropyLoss(headForward(f, head), t, weights) for f, t in zip(features, targets)]))


def fitHead(head, features, targets, epochs, learningRate, dropRate, rng, weights=None):
    """
    Trains a single head by stochastic gradient descent on the pixel-wise cross entropy, one sample per step in a
    random order per epoch, with dropout on the head input. Every pixel of the patch has its own output unit, so the
    step of each unit is taken on its own pixel loss (the mean-reduced gradient scaled by the pixel count).

    Args:
        head(HeadParams): Head to train (updated in place)
        features: Feature vectors, one per sample
        targets: Label patches [patch height, patch width], one per sample
        epochs(int): Number of epochs
        learningRate(float): SGD step size
        dropRate(float): Drop probability of the head input
        rng: numpy RandomState driving sample order and dropout
        weights: Optional per-class loss weights

    Returns:
        list: Mean loss before training and after every epoch
    """
    features = [np.asarray(f, dtype=np.float64).ravel() for f in features]
    targets = [np.asarray(t) for t in targets]
    losses = [headLoss(head, features, targets, weights)]
    for epoch in range(int(epochs)):
        for i in rng.permutation(len(features)):
            f = dropoutApply(features[i], dropRate, rng, training=True)
            pred = headForward(f, head)
            gradLogits = crossEntropyGradient(pred, targets[i], weights, mode=head.mode)*targets[i].size
            gradW, gradB, _ = headBackward(f, head, gradLogits)
            head.weights, head.biases = sgdStep([head.weights, head.biases], [gradW, gradB], learningRate)
        losses.append(headLoss(head, features, targets, weights))
    return losses


def fitHeads(features, labels, heads, grid, epochs, learningRate, dropRate, seed, weights=None, order=None,
             silent=False):
    """
    Trains one head per patch. Head k sees the full-image features and the labels of patch k; its sample order and
    dropout masks are drawn from a random stream derived from (seed, k), so results do not depend on the order in
    which the patches are processed.

    Args:
        features: Either one feature matrix [N, D] shared by all heads, or a list with one matrix per head
        labels: Label maps [N, H, W]
        heads(list): grid.count HeadParams instances (updated in place)
        grid(PatchGrid): Patch grid
        epochs(int): Number of epochs
        learningRate(float): SGD step size
        dropRate(float): Drop probability of the head input
        seed(int): Base seed
        weights: Optional per-class loss weights
        order: Optional processing order of the patch indices
        silent(bool): If set to True, no output is generated.

    Returns:
        list: Loss history of every head (in patch order)
    """
    if len(heads) != grid.count:
        raise GridError('Grid with {} patches needs {} heads, got {}.'.format(grid.count, grid.count, len(heads)))
    patchLabels = [splitLabels(l, grid) for l in labels]
    order = range(grid.count) if order is None else list(order)
    if sorted(order) != list(range(grid.count)):
        raise GridError('Patch order must be a permutation of the patch indices.')

    histories = [None]*grid.count
    for k in progress(order, total=grid.count, silent=silent, desc='heads'):
        f = features[k] if isinstance(features, list) else features
        rng = np.random.RandomState(deriveSeed(seed, 5, k))
        histories[k] = fitHead(heads[k], f, [p[k] for p in patchLabels], epochs, learningRate, dropRate, rng,
                               weights)
    return histories


def initializeHeads(featureDim, grid, classes, mode, seed):
    """
    Creates one randomly initialized head per patch, head k seeded by (seed, k).
    """
    return [HeadParams.initialize(featureDim, grid.patchShape, classes, mode, deriveSeed(seed, 4, k))
            for k in range(grid.count)]


def trainMultiPatch(dataset, trunkFactory, grid, config, heads=None, log=None, silent=False):
    """
    Multi-patch training. With a shared trunk (config.sharedTrunk), a single trunk is trained and all m*n heads use its
    features; otherwise every patch gets its own trunk. Trunks are created by trunkFactory(index) and must provide
    fit(dataset, log, silent), featureMatrix(dataset) and featureDim.

    Args:
        dataset(SceneDataset): Preprocessed training set
        trunkFactory: Function returning an untrained trunk for a given trunk index
        grid(PatchGrid): Patch grid matching the label geometry of the dataset
        config(NetworkConfig): Network configuration (epochs, learning rate, dropout, seed, head mode)
        heads(list): Initial heads (default: initialized from the seed of the configuration)
        log(list): If given, training records are appended
        silent(bool): If set to True, no output is generated.

    Returns:
        tuple: list of trained trunks and list of grid.count trained heads
    """
    if dataset.shape[1:] != (grid.height, grid.width):
        raise GridError('Grid for {}x{} labels does not fit dataset of shape {}.'.format(grid.height, grid.width,
                                                                                         dataset.shape))
    trunks = [trunkFactory(i) for i in range(1 if config.sharedTrunk else grid.count)]
    matrices = []
    for i, trunk in enumerate(trunks):
        if not silent and len(trunks) > 1:
            print('+ Training trunk of patch {}/{}.'.format(i + 1, len(trunks)))
        matrices.append(trunk.fit(dataset, log=log, silent=silent))

    if not silent:
        print('+ Training {} head(s) on a {}x{} grid.'.format(grid.count, grid.rows, grid.cols))
    features = matrices[0] if config.sharedTrunk else matrices
    weights = classWeights(dataset.labels, dataset.classes) if config.balanceClasses else None
    if heads is None:
        heads = initializeHeads(trunks[0].featureDim, grid, dataset.classes, config.headMode, config.seed)
    elif len(heads) != grid.count:
        raise GridError('Grid with {} patches needs {} heads, got {}.'.format(grid.count, grid.count, len(heads)))
    histories = fitHeads(features, dataset.labels, heads, grid, config.epochsHead, config.lrHead, config.dropout.fc,
                         config.seed, weights=weights, silent=silent)

    if log is not None:
        for epoch in range(1, config.epochsHead + 1):
            log.append(('head_sgd', '', epoch, float(np.mean([h[epoch] for h in histories])), ''))
    for head, history in zip(heads, histories):
        head.history = history
    return trunks, heads
