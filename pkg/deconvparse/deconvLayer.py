#!/usr/bin/env python
"""
Deconvolutional layers explain their input as a sum of sparse feature maps convolved with learned filters. This file
implements all operations of such layers: 3D max pooling with switches and the corresponding unpooling, the
reconstruction operator (alternating convolution and unpooling from layer l down to the input) and its adjoint, the
projection operator, the layer cost, inference of feature maps by the iterative shrinkage-thresholding algorithm (ISTA),
a matrix-free conjugate-gradient solver and the filter update that uses it.

Filter banks of a stack are indexed from 1 (bottom layer) to l (top layer). Layer i reconstructs the pooled output of
layer i-1 (the input signal y for i=1) as the full convolution of its feature maps with its filter bank.
"""

from __future__ import division, print_function
import numpy as np
from .tensorCore import asMaps, asBank, correlateBank, convolveBank, filterGradient
from .helper import progress
from .exceptions import (ConfigurationError, DimensionError, SwitchError, ParameterError, NumericalError,
                         OperatorError)

# maximal number of step-size halvings within one ISTA iteration
MAX_HALVINGS = 30


def normalizeRegion(region):
    """
    Converts a pooling region to a tuple (height, width, depth). A region with two entries pools only spatially.

    Args:
        region: Tuple/list of two or three positive integers

    Returns:
        tuple: (rh, rw, rd)
    """
    region = tuple(int(r) for r in region)
    if len(region) == 2:
        region = region + (1,)
    if len(region) != 3 or min(region) < 1:
        raise ParameterError('Pooling region must consist of two or three positive integers, got {}.'.format(region))
    return region


class SwitchSet(object):
    """
    Stores the result of one max-pooling stage: for each pooled cell, the flat index of the selected element within
    its pooling region. The flat index of the element at depth d, row a and column b of a region of shape
    (rh, rw, rd) is d*rh*rw + a*rw + b.

    Args:
        inputShape(tuple): Shape [K, H, W] of the pooled maps before pooling
        region(tuple): Pooling region (rh, rw, rd)
        indices(ndarray): Integer array of shape [K/rd, H/rh, W/rw]
    """
    def __init__(self, inputShape, region, indices):
        self.inputShape = tuple(int(s) for s in inputShape)
        self.region = normalizeRegion(region)
        self.indices = np.asarray(indices, dtype=np.int64)

        if self.indices.shape != self.pooledShape:
            raise SwitchError('Switch indices of shape {} do not fit input shape {} and region {}.'.format(
                self.indices.shape, self.inputShape, self.region))
        if self.indices.size > 0 and (self.indices.min() < 0 or self.indices.max() >= self.volume):
            raise SwitchError('Switch indices must lie within [0, {}).'.format(self.volume))

    @property
    def pooledShape(self):
        K, H, W = self.inputShape
        rh, rw, rd = self.region
        return K // rd, H // rh, W // rw

    @property
    def volume(self):
        return int(np.prod(self.region))

    def __eq__(self, other):
        return (isinstance(other, SwitchSet) and self.inputShape == other.inputShape and
                self.region == other.region and np.array_equal(self.indices, other.indices))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'SwitchSet(inputShape={}, region={})'.format(self.inputShape, self.region)


def _blocks(z, region):
    K, H, W = z.shape
    rh, rw, rd = region
    if K % rd or H % rh or W % rw:
        raise DimensionError('Maps of shape {} are not divisible by pooling region {}.'.format(z.shape, region))
    b = z.reshape(K//rd, rd, H//rh, rh, W//rw, rw).transpose(0, 2, 4, 1, 3, 5)
    return b.reshape(K//rd, H//rh, W//rw, rd*rh*rw)


def pool(z, region, fixedSwitches=None):
    """
    3D max pooling over non-overlapping regions spanning rh x rw pixels and rd adjacent maps. In free mode, each
    pooled cell holds the element of largest magnitude (sign preserved, lowest flat index on ties) and its position is
    recorded. In fixed mode, the element selected by the given switches is copied.

    Args:
        z: Maps of shape [K, H, W] (a 2D array is treated as a single map)
        region: Pooling region (rh, rw) or (rh, rw, rd)
        fixedSwitches(SwitchSet): If given, elements are selected by these switches

    Returns:
        tuple: pooled maps (same number of dimensions as z) and SwitchSet
    """
    squeeze = np.ndim(z) == 2
    z = asMaps(z)
    region = normalizeRegion(region)
    blocks = _blocks(z, region)

    if fixedSwitches is None:
        indices = np.argmax(np.abs(blocks), axis=-1)
        switches = SwitchSet(z.shape, region, indices)
    else:
        switches = fixedSwitches
        if switches.inputShape != z.shape or switches.region != region:
            raise SwitchError('Switch set for input shape {} and region {} does not fit maps of shape {} and region '
                              '{}.'.format(switches.inputShape, switches.region, z.shape, region))

    p = np.take_along_axis(blocks, switches.indices[..., None], axis=-1)[..., 0]
    if squeeze:
        p = p[0]
    return p, switches


def unpool(p, switches, targetShape=None):
    """
    Places pooled values at the positions recorded by the switches and sets all other elements to zero.

    Args:
        p: Pooled maps of shape switches.pooledShape (a 2D array is treated as a single map)
        switches(SwitchSet): Switches of the pooling stage
        targetShape(tuple): Optional shape check for the unpooled maps

    Returns:
        ndarray: Unpooled maps (same number of dimensions as p)
    """
    squeeze = np.ndim(p) == 2
    p = asMaps(p)
    if targetShape is not None:
        targetShape = tuple(int(s) for s in targetShape)
        if len(targetShape) == 2:
            targetShape = (1,) + targetShape
    if targetShape is not None and targetShape != switches.inputShape:
        raise SwitchError('Switch set for input shape {} cannot unpool to shape {}.'.format(switches.inputShape,
                                                                                           tuple(targetShape)))
    if p.shape != switches.pooledShape:
        raise SwitchError('Pooled maps of shape {} do not fit switch set with pooled shape {}.'.format(
            p.shape, switches.pooledShape))

    K, H, W = switches.inputShape
    rh, rw, rd = switches.region
    blocks = np.zeros(p.shape + (switches.volume,))
    np.put_along_axis(blocks, switches.indices[..., None], p[..., None], axis=-1)
    out = blocks.reshape(K//rd, H//rh, W//rw, rd, rh, rw).transpose(0, 3, 1, 4, 2, 5).reshape(K, H, W)
    if squeeze:
        out = out[0]
    return out


def shrink(z, beta):
    """
    Element-wise soft thresholding sign(x)*max(|x|-beta, 0), the proximal operator of the l1 norm.

    Args:
        z: Array-like
        beta(float): Non-negative threshold

    Returns:
        ndarray: Thresholded copy
    """
    if beta < 0:
        raise ParameterError('Shrinkage threshold must be non-negative, got {}.'.format(beta))
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z)*np.maximum(np.abs(z) - beta, 0.)


class DeconvLayerConfig(object):
    """
    Hyper-parameters of a single deconvolutional layer.

    Args:
        numMaps(int): Number of feature maps K_l
        filterSize: Filter extent (int or tuple of height and width)
        poolRegion: 3D pooling region (rh, rw, rd) applied to the feature maps
        lam(float): Weight of the reconstruction term in the layer cost
        beta(float): Shrinkage threshold of ISTA
        istaIterations(int): ISTA iterations per image during training
        inferenceIterations(int): ISTA iterations per image when computing features of a trained layer
        istaStep: Initial ISTA step size or 'auto' (1/lam)
        cgTolerance(float): Relative residual tolerance of the conjugate-gradient filter update
        cgMaxIterations(int): Maximal number of conjugate-gradient iterations
        normalizeFilters(bool): If True, filters are rescaled to unit L2 norm after each update
    """
    def __init__(self, numMaps=32, filterSize=3, poolRegion=(2, 2, 2), lam=1., beta=0.05, istaIterations=20,
                 inferenceIterations=40, istaStep='auto', cgTolerance=1e-6, cgMaxIterations=200,
                 normalizeFilters=True):
        self.numMaps = int(numMaps)
        if np.ndim(filterSize) == 0:
            filterSize = (filterSize, filterSize)
        self.filterSize = tuple(int(s) for s in filterSize)
        self.poolRegion = normalizeRegion(poolRegion)
        self.lam = float(lam)
        self.beta = float(beta)
        self.istaIterations = int(istaIterations)
        self.inferenceIterations = int(inferenceIterations)
        self.istaStep = istaStep if istaStep == 'auto' else float(istaStep)
        self.cgTolerance = float(cgTolerance)
        self.cgMaxIterations = int(cgMaxIterations)
        self.normalizeFilters = bool(normalizeFilters)

        if self.lam <= 0:
            raise ParameterError('Reconstruction weight lam must be positive, got {}.'.format(self.lam))
        if self.beta < 0:
            raise ParameterError('Shrinkage threshold beta must be non-negative, got {}.'.format(self.beta))
        if self.istaIterations < 1 or self.inferenceIterations < 1:
            raise ParameterError('Number of ISTA iterations must be at least 1.')
        if self.istaStep != 'auto' and self.istaStep <= 0:
            raise ParameterError('ISTA step size must be positive or "auto", got {}.'.format(self.istaStep))
        if self.cgTolerance <= 0 or self.cgMaxIterations < 1:
            raise ParameterError('CG tolerance must be positive and CG iterations at least 1.')
        if self.numMaps < 1 or min(self.filterSize) < 1 or len(self.filterSize) != 2:
            raise ConfigurationError('Deconvolutional layer needs at least one map and a positive 2D filter size.')
        if self.numMaps % self.poolRegion[2]:
            raise ConfigurationError('Number of maps ({}) is not divisible by the pooling depth ({}).'.format(
                self.numMaps, self.poolRegion[2]))

    @property
    def pooledMaps(self):
        return self.numMaps // self.poolRegion[2]

    @property
    def initialStep(self):
        return 1./self.lam if self.istaStep == 'auto' else self.istaStep

    def copy(self, **changes):
        d = self.toDict()
        d.update(changes)
        return DeconvLayerConfig(**d)

    def toDict(self):
        return {'numMaps': self.numMaps,
                'filterSize': list(self.filterSize),
                'poolRegion': list(self.poolRegion),
                'lam': self.lam,
                'beta': self.beta,
                'istaIterations': self.istaIterations,
                'inferenceIterations': self.inferenceIterations,
                'istaStep': self.istaStep,
                'cgTolerance': self.cgTolerance,
                'cgMaxIterations': self.cgMaxIterations,
                'normalizeFilters': self.normalizeFilters}

    def __repr__(self):
        return 'DeconvLayerConfig({})'.format(', '.join('{}={!r}'.format(k, v) for k, v in
                                                         sorted(self.toDict().items())))


class FilterBank(object):
    """
    Filters f_l of deconvolutional layer l, connecting K_{l-1} input maps to K_l feature maps.

    Args:
        filters: Array of shape [K_l, K_{l-1}, h, w]
        layer(int): Index of the layer within its stack (1 = bottom)
    """
    def __init__(self, filters, layer=1):
        self.filters = asBank(filters)
        self.layer = int(layer)
        self.info = None
        self.history = []

    @property
    def shape(self):
        return self.filters.shape

    @property
    def numMaps(self):
        return self.filters.shape[0]

    @property
    def inputMaps(self):
        return self.filters.shape[1]

    def norms(self):
        """
        Returns:
            ndarray: L2 norm of every filter slice (one value per feature map)
        """
        return np.sqrt(np.sum(self.filters**2, axis=(1, 2, 3)))

    def copy(self):
        bank = FilterBank(self.filters.copy(), self.layer)
        bank.info = self.info
        bank.history = list(self.history)
        return bank

    def __repr__(self):
        return 'FilterBank(layer={}, shape={})'.format(self.layer, self.shape)


def _filters(bank):
    return asBank(getattr(bank, 'filters', bank))


class LayerState(object):
    """
    Per-image latent state of layer l: feature maps z_l, the switches of all pooling stages below layer l, and the
    switches and pooled maps of layer l itself.

    Args:
        z(ndarray): Feature maps of shape [K_l, H_l, W_l]
        lowerSwitches(list): SwitchSet instances of layers 1..l-1
        topSwitches(SwitchSet): Switches of the pooling of z
        pooled(ndarray): Pooled feature maps p_l
        costs(list): Layer cost before the first and after every ISTA iteration
        eta(float): Final ISTA step size
    """
    def __init__(self, z, lowerSwitches=None, topSwitches=None, pooled=None, costs=None, eta=None):
        self.z = z
        self.lowerSwitches = list(lowerSwitches or [])
        self.topSwitches = topSwitches
        self.pooled = pooled
        self.costs = list(costs or [])
        self.eta = eta

    @property
    def cost(self):
        return self.costs[-1] if self.costs else None

    @property
    def nnzFraction(self):
        return np.count_nonzero(self.z)/self.z.size

    def __repr__(self):
        return 'LayerState(shape={}, cost={}, nnz={:.3f})'.format(self.z.shape, self.cost, self.nnzFraction)


def _checkSwitchCount(banks, switches):
    if len(banks) < 1:
        raise DimensionError('At least one filter bank is needed.')
    if len(switches) != len(banks) - 1:
        raise DimensionError('A stack of {} layers needs {} switch sets, got {}.'.format(len(banks), len(banks) - 1,
                                                                                      len(switches)))


def _lowerReconstruct(x, banks, switches):
    # F_1 U_1 ... F_m U_m x, with m = len(banks) = len(switches)
    for i in reversed(range(len(banks))):
        x = convolveBank(unpool(x, switches[i]), _filters(banks[i]))
    return x


def _lowerProject(y, banks, switches):
    # adjoint of _lowerReconstruct
    x = asMaps(y)
    for i in range(len(banks)):
        x = pool(correlateBank(x, _filters(banks[i])), switches[i].region, fixedSwitches=switches[i])[0]
    return x


def reconstruct(z, banks, switches=()):
    """
    Reconstruction operator R_l: maps top-layer feature maps down to the input space by alternating full convolution
    and unpooling, y_hat = F_1 U_1 F_2 U_2 ... F_l z. For fixed switches, this is a linear map.

    Args:
        z: Feature maps of the top layer, shape [K_l, H_l, W_l]
        banks(list): Filter banks of layers 1..l
        switches(list): SwitchSet instances of layers 1..l-1

    Returns:
        ndarray: Reconstruction of shape [K_0, H, W]
    """
    switches = list(switches)
    _checkSwitchCount(banks, switches)
    x = convolveBank(z, _filters(banks[-1]))
    return _lowerReconstruct(x, banks[:-1], switches)


def project(y, banks, switches=()):
    """
    Projection operator R_l^T, the exact adjoint of reconstruct: valid correlation and fixed-switch pooling from the
    input space up to the feature maps of layer l.

    Args:
        y: Input-space maps of shape [K_0, H, W]
        banks(list): Filter banks of layers 1..l
        switches(list): SwitchSet instances of layers 1..l-1

    Returns:
        ndarray: Maps of the shape of the top-layer feature maps
    """
    switches = list(switches)
    _checkSwitchCount(banks, switches)
    x = _lowerProject(y, banks[:-1], switches)
    return correlateBank(x, _filters(banks[-1]))


def _cost(residual, z, lam, beta):
    return 0.5*lam*np.sum(residual**2) + beta*np.sum(np.abs(z))


def layerCost(y, state, banks, cfg):
    """
    Cost of layer l for one image: (lam/2)*||R_l z - y||^2 + beta*sum_k |z_k|_1. The l1 term carries the shrinkage
    threshold, so ISTA with step 1/lam is proximal gradient descent on exactly this cost.

    Args:
        y: Input maps
        state(LayerState): Feature maps and lower switches
        banks(list): Filter banks of layers 1..l
        cfg(DeconvLayerConfig): Configuration of layer l

    Returns:
        float: Non-negative cost value
    """
    residual = reconstruct(state.z, banks, state.lowerSwitches) - asMaps(y)
    return float(_cost(residual, state.z, cfg.lam, cfg.beta))


def _configList(cfg, n):
    if isinstance(cfg, DeconvLayerConfig):
        return [cfg]*n
    cfg = list(cfg)
    if len(cfg) != n:
        raise ConfigurationError('Expected {} layer configurations, got {}.'.format(n, len(cfg)))
    return cfg


def istaInfer(y, banks, cfg, lowerSwitches=None, iterations=None, lowerConfigs=None):
    """
    Infers the feature maps of the top layer of a stack for a single image. Starting from z=0, every iteration takes a
    gradient step on the reconstruction term, applies shrinkage and re-pools z to refresh the switches:

        z <- shrink(z - eta*lam*R^T(R z - y), beta)

    The step size starts at 1/lam (or the configured value) and is halved until the layer cost does not increase;
    the reduced step size is kept for the following iterations. If no step size within a fixed number of halvings
    decreases the cost, z is kept and inference ends.

    Args:
        y: Input maps [K_0, H, W]
        banks(list): Filter banks of layers 1..l
        cfg(DeconvLayerConfig): Configuration of layer l
        lowerSwitches(list): Switches of layers 1..l-1. If None, they are inferred layer by layer.
        iterations(int): Number of ISTA iterations (default: cfg.istaIterations)
        lowerConfigs(list): Configurations of layers 1..l-1 used if lower switches have to be inferred
            (default: cfg for every layer)

    Returns:
        LayerState
    """
    y = asMaps(y)
    banks = list(banks)
    if lowerSwitches is None:
        if len(banks) > 1:
            lowerConfigs = _configList(cfg if lowerConfigs is None else lowerConfigs, len(banks) - 1)
            lowerSwitches = [s.topSwitches for s in inferStack(y, banks[:-1], lowerConfigs)]
        else:
            lowerSwitches = []
    lowerSwitches = list(lowerSwitches)
    iterations = cfg.istaIterations if iterations is None else int(iterations)

    z = np.zeros(project(y, banks, lowerSwitches).shape)
    residual = -y
    cost = _cost(residual, z, cfg.lam, cfg.beta)
    costs = [cost]
    eta = cfg.initialStep

    for iteration in range(iterations):
        gradient = cfg.lam*project(residual, banks, lowerSwitches)
        for _ in range(MAX_HALVINGS):
            candidate = shrink(z - eta*gradient, cfg.beta)
            candidateResidual = reconstruct(candidate, banks, lowerSwitches) - y
            candidateCost = _cost(candidateResidual, candidate, cfg.lam, cfg.beta)
            if not np.isfinite(candidateCost):
                raise NumericalError('Non-finite layer cost in ISTA iteration {} (step size {}, last finite cost '
                                     '{}).'.format(iteration + 1, eta, cost))
            if candidateCost <= cost:
                break
            eta /= 2.
        else:
            break

        z, residual, cost = candidate, candidateResidual, candidateCost
        costs.append(cost)

    pooled, topSwitches = pool(z, cfg.poolRegion)
    return LayerState(z, lowerSwitches, topSwitches, pooled, costs, eta)


def inferStack(y, banks, configs, inference=False):
    """
    Infers all layers of a deconvolutional stack, bottom-up. Layer i is inferred with the switches obtained for layers
    1..i-1.

    Args:
        y: Input maps [K_0, H, W]
        banks(list): Filter banks of layers 1..L
        configs: One DeconvLayerConfig per layer (or a single one used for all layers)
        inference(bool): If True, the number of inference iterations of each layer is used instead of the number of
            training iterations.

    Returns:
        list: LayerState instances of layers 1..L
    """
    banks = list(banks)
    configs = _configList(configs, len(banks))
    states = []
    switches = []
    for i, cfg in enumerate(configs):
        state = istaInfer(y, banks[:i+1], cfg, lowerSwitches=switches,
                          iterations=cfg.inferenceIterations if inference else cfg.istaIterations)
        states.append(state)
        switches = switches + [state.topSwitches]
    return states


class CGInfo(object):
    """
    Convergence report of the conjugate-gradient solver.
    """
    def __init__(self, iterations, residualNorm, converged):
        self.iterations = iterations
        self.residualNorm = residualNorm
        self.converged = converged

    def __repr__(self):
        return 'CGInfo(iterations={}, residualNorm={:.3e}, converged={})'.format(self.iterations, self.residualNorm,
                                                                                self.converged)


def _checkSymmetry(applyA, shape):
    rng = np.random.RandomState(12345)
    u = rng.normal(size=shape)
    v = rng.normal(size=shape)
    left = np.sum(np.asarray(applyA(u))*v)
    right = np.sum(u*np.asarray(applyA(v)))
    if abs(left - right) > 1e-8*(abs(left) + abs(right)) + 1e-12:
        raise OperatorError('Linear operator is not symmetric: <Au, v> = {} but <u, Av> = {}.'.format(left, right))


def cgSolve(applyA, b, tol=1e-6, maxIter=200, x0=None, checkSymmetry=True):
    """
    Solves A x = b for a symmetric positive (semi-)definite operator A given only as a callback, using linear
    conjugate gradients. The iterate is returned as soon as ||A x - b|| <= tol*||b|| or after maxIter iterations.

    Args:
        applyA: Function mapping an array of the shape of b to an array of the same shape
        b: Right-hand side (any shape)
        tol(float): Relative residual tolerance
        maxIter(int): Maximal number of iterations
        x0: Optional starting point
        checkSymmetry(bool): If True, the operator is tested on random vectors and an OperatorError is raised if it
            is not symmetric.

    Returns:
        tuple: solution x (shape of b) and CGInfo
    """
    b = np.asarray(b, dtype=np.float64)
    bNorm = np.linalg.norm(b)
    if bNorm == 0.:
        return np.zeros_like(b), CGInfo(0, 0., True)
    if checkSymmetry:
        _checkSymmetry(applyA, b.shape)

    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.array(x0, dtype=np.float64).reshape(b.shape)
        r = b - applyA(x)
    p = r.copy()
    rdotr = np.sum(r*r)

    iteration = 0
    while iteration < maxIter and np.sqrt(rdotr) > tol*bNorm:
        Ap = applyA(p)
        pAp = np.sum(p*Ap)
        if pAp <= 0.:
            break
        alpha = rdotr/pAp
        x += alpha*p
        r -= alpha*Ap
        newrdotr = np.sum(r*r)
        p = r + (newrdotr/rdotr)*p
        rdotr = newrdotr
        iteration += 1

    residualNorm = float(np.sqrt(rdotr))
    return x, CGInfo(iteration, residualNorm, residualNorm <= tol*bNorm)


def _normalizeFilters(filters):
    norms = np.sqrt(np.sum(filters**2, axis=(1, 2, 3)))
    norms[norms == 0.] = 1.
    return filters/norms[:, None, None, None], norms


def updateFilters(batch, banks, layer, cfg, silent=True):
    """
    Updates the filters f_l of layer l with all feature maps and switches fixed, by minimizing the summed squared
    reconstruction error sum_i ||R_i(z_i; f_l) - y_i||^2. The normal equations of this least-squares problem are
    solved matrix-free by conjugate gradients, starting from the current filters. If the solver stops before reaching
    its tolerance, a warning is printed and the previous filters are retained (the returned bank still carries the
    CG report in its attribute 'info').

    If filter normalization is enabled, every filter slice is rescaled to unit L2 norm afterwards and the feature maps
    z of all states in the batch are rescaled inversely, so that reconstructions are unchanged.

    Args:
        batch(list): Tuples (y, LayerState) with states inferred with the current filters
        banks(list): Filter banks of layers 1..l (at least)
        layer(int): Index l of the layer to update (1 = bottom)
        cfg(DeconvLayerConfig): Configuration of layer l
        silent(bool): If set to True, no output is generated.

    Returns:
        FilterBank: Updated filters of layer l (CGInfo stored in attribute 'info')
    """
    batch = list(batch)
    if len(batch) == 0:
        raise DimensionError('Filter update needs at least one image.')
    banks = list(banks)
    if layer < 1 or layer > len(banks):
        raise DimensionError('Layer index {} is out of range for a stack of {} layers.'.format(layer, len(banks)))
    lower = banks[:layer-1]
    current = _filters(banks[layer-1]).copy()

    ys = [asMaps(y) for y, _ in batch]
    states = [state for _, state in batch]
    for state in states:
        if len(state.lowerSwitches) != layer - 1:
            raise DimensionError('Layer state of layer {} needs {} lower switch sets.'.format(layer, layer - 1))

    def forward(f, i):
        return _lowerReconstruct(convolveBank(states[i].z, f), lower, states[i].lowerSwitches)

    def adjoint(r, i):
        return filterGradient(_lowerProject(r, lower, states[i].lowerSwitches), states[i].z)

    def applyA(f):
        return sum(adjoint(forward(f, i), i) for i in range(len(batch)))

    b = sum(adjoint(ys[i], i) for i in range(len(batch)))
    solution, info = cgSolve(applyA, b, tol=cfg.cgTolerance, maxIter=cfg.cgMaxIterations, x0=current,
                             checkSymmetry=False)

    if not np.all(np.isfinite(solution)):
        raise NumericalError('Non-finite filters after CG update of layer {} ({}).'.format(layer, info))

    if not info.converged:
        if not silent:
            print('! WARNING: CG did not converge for layer {} ({}). Keeping previous filters.'.format(layer, info))
        solution = current

    if cfg.normalizeFilters:
        solution, norms = _normalizeFilters(solution)
        for state in states:
            state.z = state.z*norms[:, None, None]
            state.pooled = pool(state.z, state.topSwitches.region, fixedSwitches=state.topSwitches)[0]

    bank = FilterBank(solution, layer)
    bank.info = info
    return bank


def initializeFilters(shape, seed, sigma=0.01):
    """
    Draws filters from a zero-mean Gaussian and rescales every filter slice to unit L2 norm.

    Args:
        shape(tuple): [K_l, K_{l-1}, h, w]
        seed(int): Seed of the random number generator
        sigma(float): Standard deviation of the Gaussian

    Returns:
        ndarray: Normalized filters
    """
    rng = np.random.RandomState(seed)
    return _normalizeFilters(rng.normal(0., sigma, size=tuple(shape)))[0]


def trainDeconvLayer(images, lowerBanks, layer, cfg, epochs, seed, lowerConfigs=None, log=None, silent=False):
    """
    Learns the filters of deconvolutional layer l on top of fixed lower layers. The switches of the lower layers are
    inferred once per image; then every epoch infers the feature maps of all images by ISTA, records the mean cost and
    the mean fraction of nonzero coefficients, and updates the filters by conjugate gradients.

    Args:
        images(list): Input maps [K_0, H, W], one per image
        lowerBanks(list): Trained filter banks of layers 1..l-1
        layer(int): Index l of the layer to train (1 = bottom)
        cfg(DeconvLayerConfig): Configuration of layer l
        epochs(int): Number of epochs
        seed(int): Seed of the filter initialization
        lowerConfigs(list): Configurations of layers 1..l-1 (default: cfg for every layer)
        log(list): If given, a tuple (epoch, layer, mean_cost, mean_nnz_fraction) is appended per epoch
        silent(bool): If set to True, no output is generated.

    Returns:
        FilterBank: Learned filters; the per-epoch records are also stored in attribute 'history'
    """
    images = [asMaps(y) for y in images]
    if len(images) == 0:
        raise DimensionError('Training a deconvolutional layer needs at least one image.')
    lowerBanks = list(lowerBanks)
    if len(lowerBanks) != layer - 1:
        raise DimensionError('Layer {} needs {} lower filter banks, got {}.'.format(layer, layer - 1,
                                                                                   len(lowerBanks)))
    if not silent:
        print('+ Training deconvolutional layer {} on {} images.'.format(layer, len(images)))

    if layer > 1:
        lowerConfigs = _configList(cfg if lowerConfigs is None else lowerConfigs, layer - 1)
        switches = [[s.topSwitches for s in inferStack(y, lowerBanks, lowerConfigs)] for y in images]
        inputMaps = switches[0][-1].pooledShape[0]
    else:
        switches = [[] for _ in images]
        inputMaps = images[0].shape[0]

    bank = FilterBank(initializeFilters((cfg.numMaps, inputMaps) + cfg.filterSize, seed), layer)
    history = []
    for epoch in progress(range(1, int(epochs) + 1), silent=silent, desc='layer {}'.format(layer)):
        banks = lowerBanks + [bank]
        states = [istaInfer(y, banks, cfg, lowerSwitches=s) for y, s in zip(images, switches)]
        meanCost = float(np.mean([state.cost for state in states]))
        meanNnz = float(np.mean([state.nnzFraction for state in states]))
        history.append((epoch, layer, meanCost, meanNnz))
        if log is not None:
            log.append((epoch, layer, meanCost, meanNnz))
        if not silent:
            print('    + Epoch {}: mean cost {:.6g}, nonzero fraction {:.4f}'.format(epoch, meanCost, meanNnz))

        bank = updateFilters(list(zip(images, states)), banks, layer, cfg, silent=silent)

    bank.history = history
    return bank
