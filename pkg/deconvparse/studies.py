#!/usr/bin/env python
"""
Studies train and evaluate many networks: the ablation study compares the full hybrid network with variants that
remove the deconvolutional layers one by one or replace them by plain convolution stages; the seed study retrains
network variants with many random seeds to measure the spread of the resulting accuracy. All runs are independent and
can be distributed over several processes.
"""

from __future__ import division, print_function
import numpy as np
import matplotlib.pyplot as plt
from .network import Network
from .metrics import evaluate
from .fileIO import writeCSV
from .helper import progress
from .exceptions import ConfigurationError

ABLATION_HEADER = ['variant', 'seed', 'dataset', 'pixel_acc', 'class_acc']
SEED_HEADER = ['variant', 'seed', 'pixel_acc']
SEED_SUMMARY_HEADER = ['variant', 'runs', 'mean_pixel_acc', 'variance_pixel_acc']


def variantNames(config, mode):
    """
    Names of the ablation variants of a configuration with c convolution stages and L deconvolutional layers.

    Args:
        config(NetworkConfig): Full configuration
        mode(str): 'remove' (Deconv-(c+L), ..., Deconv-(c+1), CNN-c) or 'replace' (CNN-(c+L), ..., CNN-c)

    Returns:
        list: Variant names, deepest first
    """
    c, L = len(config.convStages), len(config.deconvLayers)
    if mode == 'remove':
        return ['Deconv-{}'.format(c + k) for k in range(L, 0, -1)] + ['CNN-{}'.format(c)]
    if mode == 'replace':
        return ['CNN-{}'.format(c + k) for k in range(L, -1, -1)]
    raise ConfigurationError('Unknown ablation mode "{}". Use "remove" or "replace".'.format(mode))


def _trainAndEvaluate(config, trainSet, testSet):
    network = Network(config, silent=True).fit(trainSet, silent=True)
    report = evaluate(network, testSet)
    return report.pixelAccuracy, report.classAccuracy


def _runJobs(configs, trainSet, testSet, nJobs, silent, desc):
    # results are returned in job order, independent of nJobs
    if nJobs > 1:
        try:
            from pathos.multiprocessing import ProcessPool
        except ImportError:
            raise ImportError('No module named pathos.multiprocessing. This module represents an optional '
                              'dependency of deconvparse and is therefore not installed alongside deconvparse.')

        if not silent:
            print('    + Creating {} processes.'.format(nJobs))
        pool = ProcessPool(nodes=nJobs)
        results = pool.map(_trainAndEvaluate, configs, [trainSet]*len(configs), [testSet]*len(configs))

        # prevent memory pile-up in main process
        pool.close()
        pool.join()
        pool.terminate()
        pool.restart()
        return list(results)

    return [_trainAndEvaluate(cfg, trainSet, testSet)
            for cfg in progress(configs, total=len(configs), silent=silent, desc=desc)]


class AblationStudy(object):
    """
    Trains and evaluates the ablation variants of a network configuration for several seeds.

    Args:
        config(NetworkConfig): Full configuration
        mode(str): 'remove' or 'replace' (see variantNames)
        seeds(list): Seeds; every variant is trained once per seed

    Example:
    ::
        A = dp.AblationStudy(dp.NetworkConfig(), mode='remove', seeds=[0, 1, 2])
        A.fit(trainSet, testSet)
        A.saveCSV('ablation.csv')
    """
    def __init__(self, config, mode='remove', seeds=(0,)):
        self.config = config
        self.mode = mode
        self.seeds = [int(s) for s in seeds]
        if not self.seeds:
            raise ConfigurationError('Ablation study needs at least one seed.')
        self.variants = [config.variant(name) for name in variantNames(config, mode)]
        self.records = []

    def fit(self, trainSet, testSet, nJobs=1, silent=False):
        """
        Trains every variant once per seed on the training set and evaluates it on the test set. Records
        (variant, seed, dataset, pixel_acc, class_acc) are stored in the attribute 'records'.

        Args:
            trainSet(SceneDataset): Raw training set
            testSet(SceneDataset): Raw test set
            nJobs(int): Number of processes to employ. Multiprocessing is based on the 'pathos' module.
            silent(bool): If set to True, no output is generated.

        Returns:
            AblationStudy: self
        """
        jobs = [(variant, seed) for variant in self.variants for seed in self.seeds]
        if not silent:
            print('+ Started ablation study ({} mode).'.format(self.mode))
            print('    + {} variants x {} seeds = {} runs.'.format(len(self.variants), len(self.seeds), len(jobs)))

        results = _runJobs([v.copy(seed=seed) for v, seed in jobs], trainSet, testSet, nJobs, silent, 'ablation')
        self.records = [(v.name, seed, testSet.name, pixelAcc, classAcc)
                        for (v, seed), (pixelAcc, classAcc) in zip(jobs, results)]
        if not silent:
            for name, mean in self.meanAccuracy():
                print('    + {}: mean pixel accuracy {:.4f}'.format(name, mean))
            print('+ Finished ablation study.')
        return self

    def meanAccuracy(self):
        """
        Returns:
            list: Tuples (variant name, mean pixel accuracy over seeds), in variant order
        """
        names = [v.name for v in self.variants]
        return [(name, float(np.mean([r[3] for r in self.records if r[0] == name]))) for name in names]

    def saveCSV(self, filename):
        writeCSV(filename, ABLATION_HEADER, self.records)

    def plot(self, **kwargs):
        """
        Bar chart of the mean pixel accuracy per variant, with the standard deviation over seeds as error bars.

        Args:
            **kwargs: All further keyword-arguments are passed to the bar function of matplotlib.
        """
        if not self.records:
            raise ConfigurationError('Ablation study has not been fitted yet.')
        names = [v.name for v in self.variants]
        values = [[r[3] for r in self.records if r[0] == name] for name in names]
        plt.bar(np.arange(len(names)), [np.mean(v) for v in values], yerr=[np.std(v) for v in values],
                align='center', **kwargs)
        plt.xticks(np.arange(len(names)), names)
        plt.ylabel('pixel accuracy')
        plt.title('ablation ({})'.format(self.mode))


class SeedStudy(object):
    """
    Retrains network variants with many random seeds.

    Args:
        variants(list): NetworkConfig instances; run i of a variant uses the seed config.seed + i
        nRuns(int): Number of runs per variant (at least 2)
    """
    def __init__(self, variants, nRuns=20):
        self.variants = list(variants)
        self.nRuns = int(nRuns)
        if self.nRuns < 2:
            raise ConfigurationError('Seed study needs at least 2 runs per variant, got {}.'.format(self.nRuns))
        if not self.variants:
            raise ConfigurationError('Seed study needs at least one variant.')
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ConfigurationError('Variant names of a seed study must be unique.')
        self.records = []

    def seeds(self, variant):
        return [variant.seed + i for i in range(self.nRuns)]

    def fit(self, trainSet, testSet=None, nJobs=1, silent=False):
        """
        Trains every variant nRuns times and records the pixel accuracy of every run, evaluated on the test set (or
        on the training set, if no test set is given).

        Returns:
            SeedStudy: self
        """
        testSet = trainSet if testSet is None else testSet
        jobs = [(v, seed) for v in self.variants for seed in self.seeds(v)]
        if not silent:
            print('+ Started seed study.')
            print('    + {} variants x {} runs.'.format(len(self.variants), self.nRuns))

        results = _runJobs([v.copy(seed=seed) for v, seed in jobs], trainSet, testSet, nJobs, silent, 'seeds')
        self.records = [(v.name, seed, pixelAcc) for (v, seed), (pixelAcc, _) in zip(jobs, results)]
        if not silent:
            for name, runs, mean, var in self.summary():
                print('    + {}: mean {:.4f}, variance {:.3g} ({} runs)'.format(name, mean, var, runs))
            print('+ Finished seed study.')
        return self

    def accuracies(self, name):
        return np.array([r[2] for r in self.records if r[0] == name])

    def summary(self):
        """
        Returns:
            list: Tuples (variant, runs, mean pixel accuracy, population variance of the pixel accuracy)
        """
        rows = []
        for v in self.variants:
            acc = self.accuracies(v.name)
            rows.append((v.name, len(acc), float(np.mean(acc)), float(np.var(acc))))
        return rows

    def saveCSV(self, filename, summaryFilename=None):
        writeCSV(filename, SEED_HEADER, self.records)
        if summaryFilename is not None:
            writeCSV(summaryFilename, SEED_SUMMARY_HEADER, self.summary())

    def plot(self, bins=20, **kwargs):
        """
        Histograms of the pixel accuracy of all runs, one per variant.

        Args:
            bins(int): Number of histogram bins
            **kwargs: All further keyword-arguments are passed to the hist function of matplotlib.
        """
        if not self.records:
            raise ConfigurationError('Seed study has not been fitted yet.')
        for v in self.variants:
            plt.hist(self.accuracies(v.name), bins=bins, alpha=0.6, label=v.name, **kwargs)
        plt.xlabel('pixel accuracy')
        plt.ylabel('runs')
        plt.legend()


def runAblation(config, trainSet, testSet, mode='remove', seeds=(0,), nJobs=1, silent=False):
    """
    Shortcut for AblationStudy(config, mode, seeds).fit(trainSet, testSet).
    """
    return AblationStudy(config, mode, seeds).fit(trainSet, testSet, nJobs=nJobs, silent=silent)


def runSeedStudy(variants, trainSet, nRuns=20, testSet=None, nJobs=1, silent=False):
    """
    Shortcut for SeedStudy(variants, nRuns).fit(trainSet, testSet).
    """
    return SeedStudy(variants, nRuns).fit(trainSet, testSet, nJobs=nJobs, silent=silent)
