#!/usr/bin/env python

from setuptools import setup

setup(
    name='deconvparse',
    packages=['deconvparse'],
    version='0.1',
    description='Scene parsing with hybrid convolutional/deconvolutional networks and multi-patch training.',
    license='The MIT License (MIT)',
    install_requires=['numpy>=1.20.0', 'scipy>=1.4.0', 'matplotlib>=1.5.1', 'tqdm>=4.10.0', 'dill>=0.2.5',
                      'pyparsing>=2.1.0'],
    extras_require={'parallel': ['pathos>=0.2.0'], 'test': ['pytest']},
    entry_points={'console_scripts': ['deconvparse=deconvparse.cli:main']},
    keywords = ['scene parsing', 'semantic segmentation', 'deconvolutional network', 'sparse coding', 'ISTA',
                'convolutional neural network'],
    classifiers = [],
    )
