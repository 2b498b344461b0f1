#!/usr/bin/env python

# network types
from .network import NetworkConfig, Network, Trunk, buildNetwork, trainSequential, predict

# layer modules need to be distinguishable
from . import deconvLayer
from . import deconvLayer as dl  # short form
from . import cnnLayers
from . import cnnLayers as cl  # short form
from .deconvLayer import DeconvLayerConfig, FilterBank
from .cnnLayers import DropoutSpec

# multi-patch training
from .multiPatch import PatchGrid, makeGrid, splitLabels, assemblePrediction, trainMultiPatch

# data
from .datasets import SceneSample, SceneDataset, DatasetManifest, generateSyntheticScenes
from .preprocessing import standardize, localContrastNormalize, balancedBatches, classWeights

# evaluation and studies
from .metrics import confusionMatrix, accuracyMetrics, binaryCurveMetrics, evaluate, MetricsReport
from .studies import AblationStudy, SeedStudy, runAblation, runSeedStudy

# run configuration and command line
from .parser import RunConfig, parseConfig
from .cli import dispatch

# misc
from .fileIO import save, load, readPPM, writePPM, readPGM, writePGM, readTensor, writeTensor, saveNetwork, \
    loadNetwork, readDataset, writeDataset
