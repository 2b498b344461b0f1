#!/usr/bin/env python
"""
Run configurations of the command-line interface are plain text files with one key=value pair per line. Blank lines
and everything after a '#' are ignored. Every key has a type and a default value; keys that have no sensible default
(dataset directories, model files) are required only by the commands that use them.
"""

from __future__ import print_function, division
import pyparsing as pp
from .deconvLayer import DeconvLayerConfig
from .cnnLayers import DropoutSpec
from .network import NetworkConfig
from .exceptions import ConfigurationError

# value grammars
_integer = pp.Regex(r'[+-]?\d+').setParseAction(lambda t: int(t[0]))
_point = pp.Literal('.')
_e = pp.CaselessLiteral('E')
_float = pp.Combine(pp.Word('+-' + pp.nums, pp.nums) +
                    pp.Optional(_point + pp.Optional(pp.Word(pp.nums))) +
                    pp.Optional(_e + pp.Word('+-' + pp.nums, pp.nums))).setParseAction(lambda t: float(t[0]))
_bool = (pp.oneOf('true yes on 1', caseless=True).setParseAction(lambda t: True) |
         pp.oneOf('false no off 0', caseless=True).setParseAction(lambda t: False))
_word = pp.Word(pp.alphanums + '-_./')
_triple = pp.Group(_integer + pp.Suppress(':') + _integer + pp.Suppress(':') + _integer)\
    .setParseAction(lambda t: [tuple(t[0])])

GRAMMARS = {
    'int': _integer,
    'float': _float,
    'bool': _bool,
    'str': pp.Regex(r'\S(.*\S)?'),
    'step': pp.CaselessKeyword('auto').setParseAction(lambda t: 'auto') | _float,
    'ints': pp.delimitedList(_integer).setParseAction(lambda t: [list(t)]),
    'names': pp.delimitedList(_word).setParseAction(lambda t: [list(t)]),
    'triple': _triple,
    'triples': pp.delimitedList(_triple).setParseAction(lambda t: [list(t)]),
}

# key: (type, default, description); a default of None marks keys that are required by some command
SCHEMA = {
    'seed': ('int', 0, 'base seed of all random streams'),
    'classes': ('int', 5, 'number of classes'),
    'channels': ('int', 3, 'image channels'),
    'image_size': ('int', 64, 'image height and width'),
    'train_samples': ('int', 200, 'number of synthesized training scenes'),
    'test_samples': ('int', 50, 'number of synthesized test scenes'),
    'train_dir': ('str', None, 'training set directory'),
    'test_dir': ('str', None, 'test set directory'),
    'model': ('str', None, 'model file'),
    'image': ('str', None, 'PPM image for predict and viz-heatmap'),
    'conv_stages': ('triples', [(16, 5, 2), (32, 5, 2)], 'conv stages as maps:kernel:pool'),
    'deconv_layers': ('int', 3, 'number of deconvolutional layers'),
    'deconv_maps': ('int', 32, 'feature maps per deconvolutional layer'),
    'deconv_filter': ('int', 3, 'filter size of the deconvolutional layers'),
    # depth-only pooling: the 13x13 conv output of the default geometry leaves odd 11x11, 9x9 and 7x7 deconv maps,
    # so the deconvolutional layers shrink the maps only by their filter borders
    'deconv_pool': ('triple', (1, 1, 2), 'pooling region of the deconvolutional layers as h:w:d'),
    'lam': ('float', 1., 'reconstruction weight'),
    'beta': ('float', 0.05, 'sparsity weight'),
    'ista_iterations': ('int', 20, 'ISTA iterations during training'),
    'inference_iterations': ('int', 40, 'ISTA iterations during feature inference'),
    'ista_step': ('step', 'auto', 'initial ISTA step size or auto'),
    'cg_tolerance': ('float', 1e-6, 'relative residual tolerance of the filter updates'),
    'cg_max_iterations': ('int', 200, 'maximum CG iterations of the filter updates'),
    'normalize_filters': ('bool', True, 'rescale deconvolutional filters to unit norm'),
    'deconv_target': ('str', 'features', 'reconstruction target of the deconvolutional layers: features or image'),
    'head_mode': ('str', 'softmax', 'softmax or sigmoid'),
    'patches_m': ('int', 4, 'patch rows'),
    'patches_n': ('int', 4, 'patch columns'),
    'shared_trunk': ('bool', True, 'share one trunk between all patch heads'),
    'epochs_conv': ('int', 5, 'epochs of conv stage training'),
    'epochs_deconv': ('int', 3, 'epochs per deconvolutional layer'),
    'epochs_head': ('int', 10, 'epochs of head training'),
    'lr_conv': ('float', 0.01, 'learning rate of conv stage training'),
    'lr_head': ('float', 0.005, 'learning rate of head training'),
    'dropout_input': ('float', 0.2, 'drop rate of the input'),
    'dropout_hidden': ('float', 0.5, 'drop rate of hidden maps'),
    'dropout_fc': ('float', 0.6975, 'drop rate of the fully connected head input'),
    'balance_classes': ('bool', True, 'weight losses by inverse class frequency'),
    'standardize': ('str', 'dataset', 'dataset or image'),
    'lcn_window': ('int', 9, 'local contrast normalization window (0 disables it)'),
    'ablation_mode': ('str', 'remove', 'remove or replace'),
    'ablation_seeds': ('ints', [0, 1, 2, 3, 4], 'seeds of the ablation study'),
    'seed_runs': ('int', 20, 'runs per variant of the seed study'),
    'seed_variants': ('names', None, 'variants of the seed study (default: full network and CNN of equal depth)'),
    'n_jobs': ('int', 1, 'worker processes of the studies'),
}

# required keys per command
REQUIRED = {
    'synth': [],
    'train': ['train_dir'],
    'predict': ['model', 'image'],
    'eval': ['model', 'test_dir'],
    'ablate': ['train_dir', 'test_dir'],
    'seedstudy': ['train_dir'],
    'viz-filters': ['model'],
    'viz-heatmap': ['model', 'image'],
}

_key = pp.Word(pp.alphas + '_', pp.alphanums + '_')
_assignment = _key('key') + pp.Suppress('=') + pp.Optional(pp.CharsNotIn('#'), default='')('value') + \
    pp.Optional(pp.pythonStyleComment).suppress()


class RunConfig(object):
    """
    Typed key=value configuration of a command-line run. Values are accessed by item (config['seed']); keys that were
    not set in the file hold their default.

    Args:
        values(dict): Typed values of explicitly set keys
        lines(dict): Line number of every explicitly set key
    """
    def __init__(self, values=None, lines=None):
        self.values = dict((key, default) for key, (_, default, _) in SCHEMA.items())
        self.lines = dict(lines or {})
        for key, value in (values or {}).items():
            self[key] = value

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise ConfigurationError('Unknown configuration key "{}".'.format(key))
        return self.values[key]

    def __setitem__(self, key, value):
        if key not in SCHEMA:
            raise ConfigurationError('Unknown configuration key "{}".'.format(key))
        self.values[key] = value

    def isSet(self, key):
        return key in self.lines

    def require(self, *keys):
        """
        Raises a ConfigurationError naming the first of the given keys that has no value.
        """
        for key in keys:
            if self[key] is None:
                raise ConfigurationError('Missing required key "{}" ({}).'.format(key, SCHEMA[key][2]))

    def requireFor(self, command):
        if command not in REQUIRED:
            raise ConfigurationError('Unknown command "{}".'.format(command))
        self.require(*REQUIRED[command])

    def networkConfig(self):
        """
        Returns:
            NetworkConfig: Network configuration described by this run configuration
        """
        layer = DeconvLayerConfig(numMaps=self['deconv_maps'], filterSize=self['deconv_filter'],
                                  poolRegion=self['deconv_pool'], lam=self['lam'], beta=self['beta'],
                                  istaIterations=self['ista_iterations'],
                                  inferenceIterations=self['inference_iterations'], istaStep=self['ista_step'],
                                  cgTolerance=self['cg_tolerance'], cgMaxIterations=self['cg_max_iterations'],
                                  normalizeFilters=self['normalize_filters'])
        return NetworkConfig(inputShape=(self['channels'], self['image_size'], self['image_size']),
                             classes=self['classes'],
                             convStages=self['conv_stages'],
                             deconvLayers=[layer.copy() for _ in range(self['deconv_layers'])],
                             headMode=self['head_mode'],
                             patchGrid=(self['patches_m'], self['patches_n']),
                             sharedTrunk=self['shared_trunk'],
                             seed=self['seed'],
                             epochsConv=self['epochs_conv'],
                             epochsDeconv=self['epochs_deconv'],
                             epochsHead=self['epochs_head'],
                             lrConv=self['lr_conv'],
                             lrHead=self['lr_head'],
                             dropout=DropoutSpec(self['dropout_input'], self['dropout_hidden'], self['dropout_fc']),
                             balanceClasses=self['balance_classes'],
                             standardizeMode=self['standardize'],
                             lcnWindow=self['lcn_window'],
                             deconvTarget=self['deconv_target'])

    def __repr__(self):
        return 'RunConfig({})'.format(', '.join('{}={!r}'.format(k, self.values[k]) for k in sorted(self.lines)))


def parseValue(key, text):
    """
    Converts the text of a value to the type of the given key.
    """
    if key not in SCHEMA:
        raise ConfigurationError('Unknown configuration key "{}".'.format(key))
    kind = SCHEMA[key][0]
    try:
        return GRAMMARS[kind].parseString(text.strip(), parseAll=True)[0]
    except pp.ParseException:
        raise ConfigurationError('Malformed value "{}" for key "{}" (expected {}).'.format(text.strip(), key, kind))


def parseConfig(text):
    """
    Parses a run configuration.

    Args:
        text(str): Configuration text, one key=value pair per line

    Returns:
        RunConfig

    Example:
    ::
        cfg = dp.parseConfig('patches_m=4\\npatches_n=4\\ndropout_fc=0.6975')
    """
    values, lines = {}, {}
    for number, line in enumerate(text.splitlines(), 1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue
        try:
            result = _assignment.parseString(line.strip(), parseAll=True)
        except pp.ParseException:
            raise ConfigurationError('Line {}: expected key=value, got "{}".'.format(number, line.strip()))
        key = result['key']
        if key not in SCHEMA:
            raise ConfigurationError('Line {}: unknown configuration key "{}".'.format(number, key))
        if key in lines:
            raise ConfigurationError('Line {}: key "{}" was already set in line {}.'.format(number, key, lines[key]))
        try:
            values[key] = parseValue(key, result['value'])
        except ConfigurationError as e:
            raise ConfigurationError('Line {}: {}'.format(number, e))
        lines[key] = number
    return RunConfig(values, lines)
