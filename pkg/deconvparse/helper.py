#!/usr/bin/env python
"""
This file includes basic helper functions.
"""

from __future__ import division, print_function
import numpy as np
import matplotlib.colors as colors
from tqdm import tqdm


def progress(iterable, total=None, silent=False, desc=None):
    """
    Wraps an iterable in a tqdm progress bar, unless silent output is requested.

    Args:
        iterable: Any iterable object
        total(int): Number of items (used if the iterable has no length)
        silent(bool): If set to True, the iterable is returned unchanged
        desc(str): Short label shown in front of the progress bar

    Returns:
        Iterable (tqdm instance or the original iterable)
    """
    if silent:
        return iterable
    return tqdm(iterable, total=total, desc=desc, leave=False)


def deriveSeed(seed, *keys):
    """
    Derives an independent integer seed from a base seed and a sequence of integer keys. Used to give every patch
    head, every trunk and every training stage its own random stream, so that results do not depend on the order in
    which they are processed.

    Args:
        seed(int): Base seed
        keys: Integers identifying the stream (e.g. stage code and patch index)

    Returns:
        int: Seed in the range [0, 2**32)
    """
    sequence = np.random.SeedSequence([int(seed)] + [int(k) for k in keys])
    return int(sequence.generate_state(1)[0])


def asRandomState(rng):
    """
    Returns a numpy RandomState for an integer seed, passes RandomState instances through.

    Args:
        rng: Integer seed, None or numpy RandomState

    Returns:
        numpy.random.RandomState
    """
    if isinstance(rng, np.random.RandomState):
        return rng
    return np.random.RandomState(rng)


def createColormap(color, min_factor=1.0, max_factor=0.95):
    """
    Creates colormap with range 0-1 from white to arbitrary color. Used to display class-probability heatmaps.

    Args:
        color: Matplotlib-readable color representation. Examples: 'g', '#00FFFF', '0.5', [0.1, 0.5, 0.9]
        min_factor(float): Float in the range 0-1, specifying the gray-scale color of the minimal plot value.
        max_factor(float): Float in the range 0-1, multiplication factor of 'color' argument for maximal plot value.

    Returns:
        Colormap object to be used by matplotlib-functions
    """
    rgb = colors.colorConverter.to_rgb(color)
    cdict = {'red':   [(0.0, min_factor, min_factor),
                       (1.0, max_factor*rgb[0], max_factor*rgb[0])],

             'green': [(0.0, min_factor, min_factor),
                       (1.0, max_factor*rgb[1], max_factor*rgb[1])],

             'blue':  [(0.0, min_factor, min_factor),
                       (1.0, max_factor*rgb[2], max_factor*rgb[2])]}

    return colors.LinearSegmentedColormap('custom', cdict)


def rescaleToUnit(array):
    """
    Linearly maps the values of an array to [0, 1]. Constant arrays are mapped to 0.5.

    Args:
        array(ndarray): Input values

    Returns:
        ndarray: Rescaled copy
    """
    array = np.asarray(array, dtype=float)
    low, high = np.min(array), np.max(array)
    if high - low <= 0.:
        return np.full(array.shape, 0.5)
    return (array - low)/(high - low)


def tileMontage(filters):
    """
    Tiles a filter bank into a single image on a square grid, every tile normalized to [0, 1] independently. Tiles are
    separated by a one-pixel white border.

    If the bank has three input channels, every output filter is shown as one RGB tile. Otherwise every
    (output, input) slice is shown as a gray-scale tile.

    Args:
        filters(ndarray): Filter bank of shape [K_out, K_in, h, w]

    Returns:
        ndarray: RGB montage of shape [3, H, W] with values in [0, 1]
    """
    filters = np.asarray(filters, dtype=float)
    kOut, kIn, h, w = filters.shape
    if kIn == 3:
        tiles = [rescaleToUnit(f) for f in filters]
    else:
        tiles = [np.repeat(rescaleToUnit(f)[None], 3, axis=0) for f in filters.reshape(kOut*kIn, h, w)]

    cols = int(np.ceil(np.sqrt(len(tiles))))
    rows = int(np.ceil(len(tiles)/cols))
    montage = np.ones((3, rows*(h+1) + 1, cols*(w+1) + 1))
    for i, tile in enumerate(tiles):
        r, c = divmod(i, cols)
        montage[:, 1 + r*(h+1):1 + r*(h+1) + h, 1 + c*(w+1):1 + c*(w+1) + w] = tile
    return montage
