#!/usr/bin/env python
"""
This file defines custom exceptions for deconvparse. All of them derive from DeconvParseError, so that callers (e.g.
the command-line interface) can catch every error raised by the package in one place.
"""


class DeconvParseError(Exception):
    """
    Base class of all exceptions raised by deconvparse.
    """


class ConfigurationError(DeconvParseError):
    """
    Raised if some part of a configuration is not consistent, e.g. a layer chain whose spatial extents do not divide
    the pooling regions, an unknown key in a run configuration or a missing required key for a command.
    """


class DimensionError(DeconvParseError):
    """
    Raised if the shapes of tensors do not fit, e.g. a kernel that is larger than the input it is applied to, or an
    image whose geometry differs from the one a network was trained on.
    """


class SwitchError(DeconvParseError):
    """
    Raised if a switch set does not fit the tensor it is applied to (wrong input shape, wrong region, index outside of
    the pooling region).
    """


class ParameterError(DeconvParseError):
    """
    Raised if a scalar parameter is outside of its valid range, e.g. a negative shrinkage threshold or a dropout rate
    of one.
    """


class NumericalError(DeconvParseError):
    """
    Raised if a computation produces non-finite values. The message contains diagnostics of the failing iteration.
    """


class OperatorError(DeconvParseError):
    """
    Raised by the conjugate-gradient solver if the supplied linear operator is detected not to be symmetric.
    """


class LabelError(DeconvParseError):
    """
    Raised if a label map contains class indices outside of [0, C).
    """


class DatasetError(DeconvParseError):
    """
    Raised if a dataset is not usable for the requested operation, e.g. class-balanced sampling from a dataset in which
    one of the classes never occurs, or a manifest that contradicts the stored samples.
    """


class GridError(DeconvParseError):
    """
    Raised if a multi-patch grid does not divide the label image, or if patch outputs do not fit the grid.
    """


class EvaluationError(DeconvParseError):
    """
    Raised if metrics cannot be computed, e.g. an empty confusion matrix or a single-class ground truth for
    precision-recall metrics.
    """


class FormatError(DeconvParseError):
    """
    Raised if a file (PPM/PGM image, DPTN tensor, model file) is malformed. The message names the byte offset at which
    reading failed.
    """
