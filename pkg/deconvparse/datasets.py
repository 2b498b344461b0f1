#!/usr/bin/env python
"""
Scene datasets consist of images with values in [0, 1] and integer label maps of the same spatial extent. This file
defines the sample and dataset containers, the key=value dataset manifest and a generator of synthetic scenes that
carry a vertical spatial prior (sky-like class at the top, ground-like class at the bottom, textured objects in
between), which makes per-patch spatial specialization learnable at desk scale.
"""

from __future__ import division, print_function
import numpy as np
from .exceptions import ParameterError, DatasetError, DimensionError, LabelError, FormatError


class SceneSample(object):
    """
    Image/label pair.

    Args:
        image: Array of shape [channels, H, W]
        labels: Integer array of shape [H, W]
        classes(int): If given, labels are checked to lie in [0, classes)
    """
    def __init__(self, image, labels, classes=None):
        self.image = np.asarray(image, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.image.ndim != 3 or self.labels.shape != self.image.shape[1:]:
            raise DimensionError('Image of shape {} does not fit labels of shape {}.'.format(self.image.shape,
                                                                                            self.labels.shape))
        if classes is not None and self.labels.size and (self.labels.min() < 0 or self.labels.max() >= classes):
            raise LabelError('Labels must lie in [0, {}).'.format(classes))

    @property
    def shape(self):
        return self.image.shape


class SceneDataset(object):
    """
    Ordered collection of SceneSample instances with a common geometry.

    Args:
        samples(list): SceneSample instances
        classes(int): Number of classes C
        classNames(list): Optional names of the classes (default: class0, class1, ...)
        name(str): Name of the dataset (used in reports)
        seed(int): Seed of the generator, if the dataset is synthetic
    """
    def __init__(self, samples, classes, classNames=None, name='dataset', seed=None):
        self.samples = list(samples)
        self.classes = int(classes)
        self.classNames = list(classNames) if classNames is not None else ['class{}'.format(c)
                                                                           for c in range(self.classes)]
        self.name = name
        self.seed = seed

        if len(self.samples) == 0:
            raise DatasetError('A dataset needs at least one sample.')
        if len(self.classNames) != self.classes:
            raise DatasetError('Got {} class names for {} classes.'.format(len(self.classNames), self.classes))
        shapes = set(s.shape for s in self.samples)
        if len(shapes) > 1:
            raise DimensionError('All samples of a dataset must have the same shape, got {}.'.format(sorted(shapes)))
        for s in self.samples:
            if s.labels.min() < 0 or s.labels.max() >= self.classes:
                raise LabelError('Labels must lie in [0, {}).'.format(self.classes))

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, item):
        return self.samples[item]

    def __iter__(self):
        return iter(self.samples)

    @property
    def shape(self):
        """Shape [channels, H, W] of the images."""
        return self.samples[0].shape

    @property
    def images(self):
        return np.stack([s.image for s in self.samples])

    @property
    def labels(self):
        return np.stack([s.labels for s in self.samples])

    def classCounts(self):
        """
        Returns:
            ndarray: Number of pixels per class
        """
        return np.bincount(self.labels.ravel(), minlength=self.classes)

    def withImages(self, images, name=None):
        """
        Returns a new dataset with the same labels and the given images.
        """
        images = list(images)
        if len(images) != len(self):
            raise DatasetError('Got {} images for a dataset of {} samples.'.format(len(images), len(self)))
        return SceneDataset([SceneSample(im, s.labels) for im, s in zip(images, self.samples)], self.classes,
                            self.classNames, self.name if name is None else name, self.seed)

    def subset(self, indices):
        return SceneDataset([self.samples[i] for i in indices], self.classes, self.classNames, self.name, self.seed)

    def manifest(self):
        return DatasetManifest(self.classNames, self.classCounts(), len(self), self.seed, self.shape, self.name)

    def __repr__(self):
        return 'SceneDataset(name={!r}, samples={}, classes={}, shape={})'.format(self.name, len(self), self.classes,
                                                                                 self.shape)


class DatasetManifest(object):
    """
    Summary of a stored dataset, written as a key=value text file next to the samples.

    Args:
        classNames(list): Names of the classes
        counts: Number of pixels per class
        samples(int): Number of samples
        seed(int): Seed of the generator (None if unknown)
        geometry(tuple): Image shape [channels, H, W]
        name(str): Dataset name
    """
    def __init__(self, classNames, counts, samples, seed, geometry, name='dataset'):
        self.classNames = list(classNames)
        self.counts = [int(c) for c in counts]
        self.samples = int(samples)
        self.seed = None if seed is None else int(seed)
        self.geometry = tuple(int(g) for g in geometry)
        self.name = name

    def toText(self):
        lines = ['name={}'.format(self.name),
                 'samples={}'.format(self.samples),
                 'classes={}'.format(len(self.classNames)),
                 'class_names={}'.format(','.join(self.classNames)),
                 'class_counts={}'.format(','.join(str(c) for c in self.counts)),
                 'seed={}'.format('' if self.seed is None else self.seed),
                 'channels={}'.format(self.geometry[0]),
                 'height={}'.format(self.geometry[1]),
                 'width={}'.format(self.geometry[2])]
        return '\n'.join(lines) + '\n'

    @classmethod
    def fromText(cls, text):
        """
        Parses the key=value representation written by toText.
        """
        values = {}
        for number, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise FormatError('Manifest line {} is not a key=value pair: "{}".'.format(number, line))
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
        try:
            return cls(values['class_names'].split(','),
                       [int(c) for c in values['class_counts'].split(',')],
                       int(values['samples']),
                       int(values['seed']) if values.get('seed') else None,
                       (int(values['channels']), int(values['height']), int(values['width'])),
                       values.get('name', 'dataset'))
        except (KeyError, ValueError) as e:
            raise FormatError('Malformed dataset manifest: {}.'.format(e))

    def check(self, dataset):
        """
        Raises a DatasetError if the manifest contradicts the given dataset.
        """
        if len(dataset) != self.samples:
            raise DatasetError('Manifest lists {} samples, found {}.'.format(self.samples, len(dataset)))
        if tuple(dataset.shape) != self.geometry:
            raise DatasetError('Manifest lists geometry {}, found {}.'.format(self.geometry, tuple(dataset.shape)))
        if list(dataset.classCounts()) != self.counts:
            raise DatasetError('Class counts of the manifest do not match the stored label maps.')

    def __eq__(self, other):
        return isinstance(other, DatasetManifest) and self.toText() == other.toText()

    def __ne__(self, other):
        return not self.__eq__(other)


# appearance of the classes does not depend on the dataset seed, so that training and test sets match
_PALETTE_SEED = 7919


def _palette(classes, channels):
    rng = np.random.RandomState(_PALETTE_SEED)
    colors = rng.uniform(0.1, 0.9, size=(classes, channels))
    frequencies = rng.uniform(0.05, 0.35, size=(classes, 2))
    return colors, frequencies


def generateSyntheticScenes(n, C, size, seed, channels=3, name='synthetic'):
    """
    Generates synthetic scenes with a vertical spatial prior. Every label map has class 0 above a random horizon
    (which never lies below the middle of the image) and class 1 below it. Each class 2..C-1 is placed as one textured
    rectangle or ellipse between 20% and 80% of the image height. Images are a class-specific color plus a
    class-specific stripe texture and Gaussian noise, clipped to [0, 1].

    Args:
        n(int): Number of scenes
        C(int): Number of classes (>= 2)
        size(int): Height and width of the scenes (>= 16)
        seed(int): Seed of the generator
        channels(int): Number of image channels
        name(str): Name of the dataset

    Returns:
        SceneDataset
    """
    if C < 2:
        raise ParameterError('Synthetic scenes need at least 2 classes, got {}.'.format(C))
    if size < 16:
        raise ParameterError('Synthetic scenes need a size of at least 16 pixels, got {}.'.format(size))
    if n < 1 or channels < 1:
        raise ParameterError('Number of scenes and channels must be positive.')

    rng = np.random.RandomState(seed)
    colors, frequencies = _palette(C, channels)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)

    samples = []
    for _ in range(n):
        labels = np.ones((size, size), dtype=np.int64)
        horizon = rng.randint(size//4, size//2 + 1)
        labels[:horizon] = 0

        for c in range(2, C):
            h = rng.randint(max(2, size//10), max(3, 3*size//10))
            w = rng.randint(max(2, size//10), max(3, 3*size//10))
            top = rng.randint(int(np.ceil(0.2*size)), max(int(np.ceil(0.2*size)) + 1, int(0.8*size) - h + 1))
            left = rng.randint(0, size - w + 1)
            if rng.rand() < 0.5:
                labels[top:top+h, left:left+w] = c
            else:
                cy, cx = top + (h - 1)/2., left + (w - 1)/2.
                mask = ((rows - cy)/(h/2.))**2 + ((cols - cx)/(w/2.))**2 <= 1.
                labels[mask] = c

        image = colors[labels].transpose(2, 0, 1).copy()
        texture = 0.08*np.sin(2*np.pi*(rows*frequencies[labels, 0] + cols*frequencies[labels, 1]))
        image += texture[None]
        image += rng.normal(0., 0.03, size=image.shape)
        samples.append(SceneSample(np.clip(image, 0., 1.), labels))

    return SceneDataset(samples, C, name=name, seed=seed)
