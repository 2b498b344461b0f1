# -*- coding: utf-8 -*-
#
# deconvparse documentation build configuration file.

import sys
import os

sys.path.insert(0, os.path.abspath('../../'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'deconvparse'
copyright = u'2026, deconvparse developers'
author = u'deconvparse developers'
version = u'0.1'
release = u'0.1'

language = None
exclude_patterns = ['_build', '**.ipynb_checkpoints']
pygments_style = 'sphinx'
todo_include_todos = False

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'deconvparsedoc'

latex_documents = [
    (master_doc, 'deconvparse.tex', u'deconvparse Documentation', author, 'manual'),
]
man_pages = [
    (master_doc, 'deconvparse', u'deconvparse Documentation', [author], 1)
]
texinfo_documents = [
    (master_doc, 'deconvparse', u'deconvparse Documentation', author, 'deconvparse',
     'Scene parsing with hybrid convolutional/deconvolutional networks', 'Miscellaneous'),
]

intersphinx_mapping = {'https://docs.python.org/': None}
