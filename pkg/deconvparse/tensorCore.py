#!/usr/bin/env python
"""
This file implements the two convolution primitives that all layers of deconvparse are built on: valid
cross-correlation and its exact adjoint, full convolution. Both are expressed as tensor contractions over sliding
windows, so that whole filter banks (many input and output maps) are processed in one call. Tensors are always double
precision numpy arrays in row-major layout; multi-channel signals have the shape [channels, height, width].
"""

from __future__ import division, print_function
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from .exceptions import DimensionError, NumericalError


def asMaps(x, name='input'):
    """
    Converts an array to a stack of 2D maps of shape [channels, height, width]. A single 2D map is interpreted as one
    channel.

    Args:
        x: Array-like with two or three dimensions
        name(str): Name used in error messages

    Returns:
        ndarray: Float64 array with three dimensions
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None]
    if x.ndim != 3:
        raise DimensionError('Expected {} with 2 or 3 dimensions, got shape {}.'.format(name, x.shape))
    return x


def asBank(f, name='filter bank'):
    """
    Converts an array to a filter bank of shape [output maps, input maps, height, width]. A 2D kernel is interpreted
    as a bank with one input and one output map.

    Args:
        f: Array-like with two or four dimensions
        name(str): Name used in error messages

    Returns:
        ndarray: Float64 array with four dimensions
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 2:
        return f[None, None]
    if f.ndim != 4:
        raise DimensionError('Expected {} with 2 or 4 dimensions, got shape {}.'.format(name, f.shape))
    return f


def checkFinite(x, name='tensor'):
    """
    Raises a NumericalError if the given array contains NaN or Inf values.

    Args:
        x(ndarray): Array to check
        name(str): Name used in error messages
    """
    if not np.all(np.isfinite(x)):
        raise NumericalError('Non-finite values detected in {}.'.format(name))


def _windows(x, h, w):
    if h > x.shape[1] or w > x.shape[2]:
        raise DimensionError('Kernel of size {}x{} does not fit into maps of size {}x{}.'.format(h, w, x.shape[1],
                                                                                                x.shape[2]))
    return sliding_window_view(x, (h, w), axis=(1, 2))


def correlateBank(x, filters):
    """
    Valid cross-correlation of a stack of maps with a filter bank, summed over input maps:

        out[k, i, j] = sum_c sum_{a,b} x[c, i+a, j+b] * filters[k, c, a, b]

    Args:
        x: Input maps of shape [C, H, W]
        filters: Filter bank of shape [K, C, h, w]

    Returns:
        ndarray: Output maps of shape [K, H-h+1, W-w+1]
    """
    x = asMaps(x)
    filters = asBank(filters)
    if filters.shape[1] != x.shape[0]:
        raise DimensionError('Filter bank expects {} input maps, got {}.'.format(filters.shape[1], x.shape[0]))

    win = _windows(x, filters.shape[2], filters.shape[3])
    return np.tensordot(filters, win, axes=([1, 2, 3], [0, 3, 4]))


def convolveBank(z, filters):
    """
    Full convolution of a stack of maps with a filter bank, summed over output maps. This is the exact adjoint of
    correlateBank with the same filters:

        out[c, i, j] = sum_k sum_{a,b} z[k, i-a, j-b] * filters[k, c, a, b]

    Args:
        z: Maps of shape [K, A, B]
        filters: Filter bank of shape [K, C, h, w]

    Returns:
        ndarray: Maps of shape [C, A+h-1, B+w-1]
    """
    z = asMaps(z)
    filters = asBank(filters)
    if filters.shape[0] != z.shape[0]:
        raise DimensionError('Filter bank expects {} feature maps, got {}.'.format(filters.shape[0], z.shape[0]))

    h, w = filters.shape[2:]
    padded = np.pad(z, ((0, 0), (h-1, h-1), (w-1, w-1)))
    win = sliding_window_view(padded, (h, w), axis=(1, 2))
    return np.tensordot(filters[:, :, ::-1, ::-1], win, axes=([0, 2, 3], [0, 3, 4]))


def filterGradient(x, d):
    """
    Gradient of the inner product <correlateBank(x, f), d> with respect to the filter bank f. By adjointness, this is
    also the gradient of <convolveBank(d, f), x> with respect to f.

    Args:
        x: Input maps of shape [C, H, W]
        d: Output-side maps of shape [K, H-h+1, W-w+1]

    Returns:
        ndarray: Gradient of shape [K, C, h, w]
    """
    x = asMaps(x)
    d = asMaps(d, name='output maps')
    h = x.shape[1] - d.shape[1] + 1
    w = x.shape[2] - d.shape[2] + 1
    if h < 1 or w < 1:
        raise DimensionError('Output maps of shape {} are larger than input maps of shape {}.'.format(d.shape,
                                                                                                      x.shape))
    win = sliding_window_view(x, (h, w), axis=(1, 2))
    return np.tensordot(d, win, axes=([1, 2], [1, 2]))


def correlateValid(input, kernel):
    """
    Valid cross-correlation of a (multi-channel) map with a single kernel, channels summed. No kernel flip is applied.

    Args:
        input: Array of shape [H, W] or [C, H, W]
        kernel: Array of shape [h, w] or [C, h, w]

    Returns:
        ndarray: Map of shape [H-h+1, W-w+1]

    Example:
    ::
        correlateValid([[1, 2], [3, 4]], [[1, 0], [0, 1]])  # -> [[5.]]
    """
    x = asMaps(input)
    k = asMaps(kernel, name='kernel')
    if k.shape[0] != x.shape[0]:
        raise DimensionError('Kernel has {} channels, input has {}.'.format(k.shape[0], x.shape[0]))
    return correlateBank(x, k[None])[0]


def convolveFull(input, kernel):
    """
    Full convolution of a single map with a kernel; the exact adjoint of correlateValid with the same kernel. For a
    multi-channel kernel, one output map per channel is returned.

    Args:
        input: Array of shape [H', W']
        kernel: Array of shape [h, w] or [C, h, w]

    Returns:
        ndarray: Array of shape [H'+h-1, W'+w-1] (2D kernel) or [C, H'+h-1, W'+w-1] (3D kernel)
    """
    y = np.asarray(input, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionError('Expected a single 2D map, got shape {}.'.format(y.shape))
    kernel = np.asarray(kernel, dtype=np.float64)
    out = convolveBank(y[None], asMaps(kernel, name='kernel')[None])
    if kernel.ndim == 2:
        return out[0]
    return out


def reduceStats(t):
    """
    Population statistics of all entries of a tensor.

    Args:
        t: Nonempty array-like

    Returns:
        tuple: (mean, variance, l1, l2sq) with l1 = sum(|x|) and l2sq = sum(x^2)
    """
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        raise DimensionError('Cannot compute statistics of an empty tensor.')
    return float(np.mean(t)), float(np.var(t)), float(np.sum(np.abs(t))), float(np.sum(t**2))
