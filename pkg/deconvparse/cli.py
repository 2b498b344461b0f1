#!/usr/bin/env python
"""
Command-line interface: synthesize datasets, train and evaluate networks, predict label maps, run ablation and seed
studies and visualize filters and class probabilities. All outputs are written to the directory given by --out.

Usage:
::
    python -m deconvparse synth --config run.cfg --out data
    python -m deconvparse train --config run.cfg --out model --seed 3
"""

from __future__ import division, print_function
import os
import io
import sys
import argparse
import numpy as np
from .parser import parseConfig, REQUIRED
from .datasets import generateSyntheticScenes
from .network import Network
from .metrics import evaluate, CSV_HEADER
from .studies import runAblation, runSeedStudy
from .fileIO import readPPM, writePPM, writePGM, readDataset, writeDataset, saveNetwork, loadNetwork, writeCSV, \
    writeTrainingLog
from .helper import deriveSeed, tileMontage
from .exceptions import DeconvParseError, ConfigurationError

COMMANDS = sorted(REQUIRED)
MODEL_FILE = 'model.dpm'


def workerCount(requested):
    """
    Number of worker processes: the configured n_jobs, capped by the environment variable DECONVPARSE_THREADS.
    """
    limit = os.environ.get('DECONVPARSE_THREADS')
    if limit is None or limit == '':
        return max(1, requested)
    try:
        limit = int(limit)
    except ValueError:
        raise ConfigurationError('DECONVPARSE_THREADS must be a positive integer, got "{}".'.format(limit))
    if limit < 1:
        raise ConfigurationError('DECONVPARSE_THREADS must be a positive integer, got {}.'.format(limit))
    return max(1, min(requested, limit))


def _probabilityMap(p):
    return np.round(np.clip(p, 0., 1.)*255.).astype(np.int64)


def _synth(config, out, silent):
    size, C, channels = config['image_size'], config['classes'], config['channels']
    train = generateSyntheticScenes(config['train_samples'], C, size, deriveSeed(config['seed'], 8, 0),
                                    channels=channels, name='train')
    test = generateSyntheticScenes(config['test_samples'], C, size, deriveSeed(config['seed'], 8, 1),
                                   channels=channels, name='test')
    writeDataset(os.path.join(out, 'train'), train, silent=silent)
    writeDataset(os.path.join(out, 'test'), test, silent=silent)


def _train(config, out, silent):
    train = readDataset(config['train_dir'], silent=silent)
    validation = readDataset(config['test_dir'], silent=silent) if config['test_dir'] is not None else train
    network = Network(config.networkConfig(), silent=silent).fit(train, silent=silent)
    report = evaluate(network, validation)
    network.validationPixelAcc = report.pixelAccuracy
    if not silent:
        print('+ Validation pixel accuracy on "{}": {:.4f}'.format(validation.name, report.pixelAccuracy))
    saveNetwork(os.path.join(out, MODEL_FILE), network, silent=silent)
    writeTrainingLog(os.path.join(out, 'training_log.csv'), network.log)


def _predict(config, out, silent):
    network = loadNetwork(config['model'], silent=silent)
    labels, probs = network.predict(readPPM(config['image']))
    writePGM(os.path.join(out, 'labels.pgm'), labels)
    for c, p in enumerate(probs):
        writePGM(os.path.join(out, 'prob_class{}.pgm'.format(c)), _probabilityMap(p))
    if not silent:
        print('+ Wrote label map and {} probability maps to {}.'.format(len(probs), out))


def _eval(config, out, silent):
    network = loadNetwork(config['model'], silent=silent)
    report = evaluate(network, readDataset(config['test_dir'], silent=silent), silent=silent)
    writeCSV(os.path.join(out, 'metrics.csv'), CSV_HEADER, [report.toRow()])
    if not silent:
        print('+ {}'.format(report))


def _ablate(config, out, silent):
    train = readDataset(config['train_dir'], silent=silent)
    test = readDataset(config['test_dir'], silent=silent)
    study = runAblation(config.networkConfig(), train, test, mode=config['ablation_mode'],
                        seeds=config['ablation_seeds'], nJobs=workerCount(config['n_jobs']), silent=silent)
    study.saveCSV(os.path.join(out, 'ablation.csv'))


def _seedStudy(config, out, silent):
    networkConfig = config.networkConfig()
    names = config['seed_variants']
    if names is None:
        names = [networkConfig.name, 'CNN-{}'.format(len(networkConfig.convStages) + len(networkConfig.deconvLayers))]
    variants = [networkConfig.variant(name) for name in names]
    train = readDataset(config['train_dir'], silent=silent)
    test = readDataset(config['test_dir'], silent=silent) if config['test_dir'] is not None else None
    study = runSeedStudy(variants, train, nRuns=config['seed_runs'], testSet=test,
                         nJobs=workerCount(config['n_jobs']), silent=silent)
    study.saveCSV(os.path.join(out, 'seed_study.csv'), os.path.join(out, 'seed_summary.csv'))


def _vizFilters(config, out, silent):
    network = loadNetwork(config['model'], silent=silent)
    trunk = network.trunks[0]
    layers = len(trunk.convStages) + len(trunk.deconvBanks)
    for layer in range(1, layers + 1):
        writePPM(os.path.join(out, 'filters_layer{}.ppm'.format(layer)), tileMontage(trunk.filters(layer)))
    if not silent:
        print('+ Wrote filter montages of {} layers to {}.'.format(layers, out))


def _vizHeatmap(config, out, silent):
    network = loadNetwork(config['model'], silent=silent)
    probs = network.predict(readPPM(config['image']))[1]
    for c, p in enumerate(probs):
        writePGM(os.path.join(out, 'heatmap_class{}.pgm'.format(c)), _probabilityMap(p))
    if not silent:
        print('+ Wrote {} class heatmaps to {}.'.format(len(probs), out))


HANDLERS = {
    'synth': _synth,
    'train': _train,
    'predict': _predict,
    'eval': _eval,
    'ablate': _ablate,
    'seedstudy': _seedStudy,
    'viz-filters': _vizFilters,
    'viz-heatmap': _vizHeatmap,
}


def dispatch(command, config, out='.', silent=False):
    """
    Runs a command and writes its artifacts to the output directory.

    Args:
        command(str): One of synth, train, predict, eval, ablate, seedstudy, viz-filters, viz-heatmap
        config(RunConfig): Run configuration
        out(str): Output directory (created if necessary)
        silent(bool): If set to True, only errors are printed.

    Returns:
        int: Exit status (0 on success, 1 on any error)
    """
    try:
        if command not in HANDLERS:
            raise ConfigurationError('Unknown command "{}". Use one of: {}.'.format(command, ', '.join(COMMANDS)))
        config.requireFor(command)
        if not os.path.isdir(out):
            os.makedirs(out)
        HANDLERS[command](config, out, silent)
    except (DeconvParseError, IOError, OSError) as e:
        print('! ERROR: {}'.format(e), file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    """
    Entry point of the deconvparse command.
    """
    parser = argparse.ArgumentParser(prog='deconvparse', description='Scene parsing with hybrid '
                                                                     'convolutional/deconvolutional networks.')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', required=True, help='run configuration (key=value lines)')
    parser.add_argument('--out', default='.', help='output directory')
    parser.add_argument('--seed', type=int, default=None, help='overrides the seed of the configuration')
    parser.add_argument('--silent', action='store_true', help='print errors only')
    args = parser.parse_args(argv)

    try:
        with io.open(args.config, 'r', encoding='utf-8') as f:
            config = parseConfig(f.read())
    except (DeconvParseError, IOError, OSError) as e:
        print('! ERROR: {}'.format(e), file=sys.stderr)
        return 1
    if args.seed is not None:
        config['seed'] = args.seed
    return dispatch(args.command, config, args.out, silent=args.silent)
