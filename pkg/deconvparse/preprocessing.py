#!/usr/bin/env python
"""
This file includes functions that prepare scene datasets for training: zero-mean/unit-variance standardization, local
contrast normalization, class-balanced resampling of target pixels and the corresponding inverse-frequency class
weights, as well as the subsampling of label maps to the resolution of feature maps.
"""

from __future__ import division, print_function
import numpy as np
from scipy.ndimage import uniform_filter
from .datasets import SceneDataset
from .exceptions import ParameterError, DatasetError, DimensionError

# floor of standard deviations used for division
STD_FLOOR = 1e-8
# floor of local standard deviations in local contrast normalization
LCN_EPSILON = 1e-4


def _images(dataset):
    if isinstance(dataset, SceneDataset):
        return dataset.images
    images = np.asarray(dataset, dtype=np.float64)
    if images.ndim == 3:
        images = images[None]
    if images.ndim != 4 or images.shape[0] == 0:
        raise DimensionError('Expected a nonempty stack of images [N, channels, H, W], got shape {}.'.format(
            images.shape))
    return images


def channelStats(dataset):
    """
    Per-channel population mean and standard deviation over all images of a dataset.

    Args:
        dataset: SceneDataset or array of shape [N, channels, H, W]

    Returns:
        tuple: mean and standard deviation (arrays of length channels; std floored at 1e-8)
    """
    images = _images(dataset)
    mean = images.mean(axis=(0, 2, 3))
    std = np.maximum(images.std(axis=(0, 2, 3)), STD_FLOOR)
    return mean, std


def standardize(dataset, mode='dataset', mean=None, std=None):
    """
    Shifts and scales every channel to zero mean and unit (population) variance. In 'dataset' mode, the statistics are
    computed over all images (or taken from the arguments, e.g. training-set statistics applied to a test set); in
    'image' mode, every image is standardized by its own statistics.

    Args:
        dataset: SceneDataset or array of shape [N, channels, H, W]
        mode(str): 'dataset' or 'image'
        mean: Optional per-channel mean ('dataset' mode)
        std: Optional per-channel standard deviation ('dataset' mode)

    Returns:
        Standardized copy (same type as the input)
    """
    images = _images(dataset)
    if mode == 'dataset':
        if mean is None or std is None:
            mean, std = channelStats(images)
        out = (images - np.asarray(mean)[None, :, None, None])/np.maximum(np.asarray(std), STD_FLOOR)[None, :, None,
                                                                                                        None]
    elif mode == 'image':
        m = images.mean(axis=(2, 3), keepdims=True)
        s = np.maximum(images.std(axis=(2, 3), keepdims=True), STD_FLOOR)
        out = (images - m)/s
    else:
        raise ParameterError('Unknown standardization mode "{}". Use "dataset" or "image".'.format(mode))

    if isinstance(dataset, SceneDataset):
        return dataset.withImages(out)
    return out


def localContrastNormalize(image, window=9):
    """
    Subtractive and divisive local contrast normalization with a uniform window, applied to every channel
    independently: x' = (x - local mean)/max(local std, 1e-4). Borders are handled by reflection. The global mean of
    every channel is removed first, which makes the result invariant to global additive shifts.

    Args:
        image: Array of shape [channels, H, W] or [H, W]
        window(int): Odd window extent >= 3

    Returns:
        ndarray: Normalized image of the same shape
    """
    if int(window) != window or window < 3 or window % 2 == 0:
        raise ParameterError('LCN window must be an odd integer >= 3, got {}.'.format(window))
    window = int(window)
    x = np.asarray(image, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]

    x = x - x.mean(axis=(1, 2), keepdims=True)
    size = (1, window, window)
    localMean = uniform_filter(x, size=size, mode='reflect')
    localVar = np.maximum(uniform_filter(x**2, size=size, mode='reflect') - localMean**2, 0.)
    out = (x - localMean)/np.maximum(np.sqrt(localVar), LCN_EPSILON)
    return out[0] if squeeze else out


def classWeights(labels, C):
    """
    Inverse-frequency class weights w_c = N/(C*n_c), with N the total number of pixels and n_c the number of pixels of
    class c. Weighting the loss of every pixel by the weight of its class gives every class the same expected
    contribution, like resampling with balanced class frequencies. Absent classes get weight 0.

    Args:
        labels: Integer label maps (any shape)
        C(int): Number of classes

    Returns:
        ndarray: Weights of length C
    """
    counts = np.bincount(np.asarray(labels, dtype=np.int64).ravel(), minlength=C).astype(np.float64)
    weights = np.zeros(C)
    present = counts > 0
    weights[present] = counts.sum()/(C*counts[present])
    return weights


def balancedBatches(dataset, batchSize, seed, numBatches=None):
    """
    Stream of class-balanced batches of target pixels. Every batch cycles through all classes in random order (so each
    class appears in every batch of at least C pixels), and for each drawn class a pixel of that class is chosen
    uniformly from the whole dataset (with replacement).

    Args:
        dataset: SceneDataset or array of label maps [N, H, W]
        batchSize(int): Number of pixels per batch
        seed(int): Seed of the sampler
        numBatches(int): Number of batches (None: endless stream)

    Returns:
        Generator of integer arrays of shape [batchSize, 4] with columns (sample, row, column, class)
    """
    if isinstance(dataset, SceneDataset):
        labels, C = dataset.labels, dataset.classes
    else:
        labels = np.asarray(dataset, dtype=np.int64)
        C = int(labels.max()) + 1
    if batchSize < 1:
        raise ParameterError('Batch size must be positive, got {}.'.format(batchSize))

    pixels = [np.flatnonzero(labels == c) for c in range(C)]
    absent = [c for c in range(C) if len(pixels[c]) == 0]
    if absent or C < 2:
        raise DatasetError('Balanced sampling needs all classes to be present; missing classes: {}.'.format(
            absent if absent else 'only one class in dataset'))

    def stream():
        rng = np.random.RandomState(seed)
        _, H, W = labels.shape
        cycle = np.arange(C)
        count = 0
        while numBatches is None or count < numBatches:
            drawn = np.concatenate([rng.permutation(cycle) for _ in range(-(-batchSize//C))])[:batchSize]
            flat = np.empty(batchSize, dtype=np.int64)
            for c in range(C):
                mask = drawn == c
                flat[mask] = pixels[c][rng.randint(0, len(pixels[c]), size=np.count_nonzero(mask))]
            sample, rest = np.divmod(flat, H*W)
            row, col = np.divmod(rest, W)
            yield np.stack([sample, row, col, drawn], axis=1)
            count += 1

    return stream()


def subsampleLabels(labels, shape):
    """
    Nearest-neighbor subsampling of a label map to a coarser grid: cell (i, j) takes the label at
    (floor((i+0.5)*H/h), floor((j+0.5)*W/w)).

    Args:
        labels: Integer array [H, W]
        shape(tuple): Target shape (h, w)

    Returns:
        ndarray: Integer array of shape (h, w)
    """
    labels = np.asarray(labels)
    H, W = labels.shape
    h, w = shape
    rows = np.floor((np.arange(h) + 0.5)*H/h).astype(np.int64)
    cols = np.floor((np.arange(w) + 0.5)*W/w).astype(np.int64)
    return labels[np.ix_(rows, cols)]
