#!/usr/bin/env python

from __future__ import print_function, division
import pytest
import deconvparse as dp
from deconvparse.parser import RunConfig, parseConfig, parseValue, SCHEMA, REQUIRED
from deconvparse.exceptions import ConfigurationError


class TestParseValue:
    def test_scalars(self):
        assert parseValue('seed', ' 42 ') == 42
        assert parseValue('lam', '2') == 2.
        assert parseValue('cg_tolerance', '1e-8') == 1e-8
        assert parseValue('dropout_fc', '0.6975') == 0.6975
        assert parseValue('model', 'out/model.dpm') == 'out/model.dpm'

    def test_bools(self):
        for text in ['true', 'Yes', 'on', '1']:
            assert parseValue('shared_trunk', text) is True
        for text in ['false', 'NO', 'off', '0']:
            assert parseValue('shared_trunk', text) is False

    def test_step(self):
        assert parseValue('ista_step', 'auto') == 'auto'
        assert parseValue('ista_step', '0.25') == 0.25

    def test_lists(self):
        assert parseValue('ablation_seeds', '3, 4,5') == [3, 4, 5]
        assert parseValue('seed_variants', 'Deconv-5,CNN-5') == ['Deconv-5', 'CNN-5']
        assert parseValue('deconv_pool', '2:2:1') == (2, 2, 1)
        assert parseValue('conv_stages', '16:5:2, 32:5:2') == [(16, 5, 2), (32, 5, 2)]

    def test_malformed(self):
        for key, text in [('seed', '3.5'), ('lam', 'x'), ('shared_trunk', 'maybe'), ('deconv_pool', '2:2'),
                          ('ista_step', 'fast'), ('model', '')]:
            with pytest.raises(ConfigurationError):
                parseValue(key, text)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            parseValue('epochs', '3')


class TestParseConfig:
    def test_comments_and_blank_lines(self):
        config = parseConfig('# run\n\npatches_m = 2  # rows\npatches_n=3\ntrain_dir = data/train\n')
        assert config['patches_m'] == 2
        assert config['patches_n'] == 3
        assert config['train_dir'] == 'data/train'
        assert config.isSet('patches_n') and not config.isSet('seed')
        assert config.lines['patches_m'] == 3

    def test_defaults(self):
        config = parseConfig('')
        for key, (_, default, _) in SCHEMA.items():
            assert config[key] == default
        assert config['dropout_fc'] == 0.6975

    def test_line_numbers_in_errors(self):
        for text, line in [('seed=1\nnot a pair\n', 2), ('seed=1\n\nfoo=3\n', 3), ('seed=1\nseed=2\n', 2),
                           ('\n\n\nlam=abc', 4)]:
            with pytest.raises(ConfigurationError) as e:
                parseConfig(text)
            assert str(e.value).startswith('Line {}:'.format(line))

    def test_duplicate_message(self):
        with pytest.raises(ConfigurationError) as e:
            parseConfig('seed=1\nseed=2\n')
        assert 'already set in line 1' in str(e.value)


class TestRunConfig:
    def test_item_access(self):
        config = RunConfig({'seed': 3})
        assert config['seed'] == 3
        config['seed'] = 4
        assert config['seed'] == 4
        with pytest.raises(ConfigurationError):
            config['unknown']
        with pytest.raises(ConfigurationError):
            config['unknown'] = 1

    def test_required_keys(self):
        config = parseConfig('model=m.dpm\n')
        config.requireFor('synth')
        config.requireFor('viz-filters')
        with pytest.raises(ConfigurationError) as e:
            config.requireFor('predict')
        assert 'Missing required key "image"' in str(e.value)
        with pytest.raises(ConfigurationError):
            config.requireFor('fly')

    def test_commands(self):
        assert sorted(REQUIRED) == ['ablate', 'eval', 'predict', 'seedstudy', 'synth', 'train', 'viz-filters',
                                    'viz-heatmap']

    def test_network_config(self):
        config = parseConfig('image_size=16\nclasses=3\nconv_stages=4:3:2\ndeconv_layers=2\ndeconv_maps=4\n'
                             'deconv_filter=2\ndeconv_pool=1:1:2\npatches_m=2\npatches_n=2\nista_step=0.5\n'
                             'dropout_fc=0.25\nshared_trunk=no\nseed=9\ndeconv_target=image\n')
        net = config.networkConfig()
        assert isinstance(net, dp.NetworkConfig)
        assert net.inputShape == (3, 16, 16)
        assert net.convStages == [(4, 3, 2)]
        assert len(net.deconvLayers) == 2
        assert net.deconvLayers[1].poolRegion == (1, 1, 2)
        assert net.deconvLayers[0].istaStep == 0.5
        assert net.deconvLayers[0] is not net.deconvLayers[1]
        assert net.patchGrid == (2, 2)
        assert net.dropout.fc == 0.25
        assert not net.sharedTrunk
        assert net.seed == 9
        assert net.deconvTarget == 'image'
        assert net.name == 'Deconv-3'

    def test_inconsistent_network(self):
        config = parseConfig('image_size=16\npatches_m=3\n')
        with pytest.raises(ConfigurationError):
            config.networkConfig()
