# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join("..", "..")))

import bayes_reinsurance  # noqa: E402
import bayes_reinsurance.errors  # noqa: E402,F401

# -- Project information -----------------------------------------------------

project = "bayes-reinsurance"
copyright = "bayes-reinsurance developers"
author = "bayes-reinsurance developers"

version = bayes_reinsurance.__version__
release = version

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
    "numpydoc",
]

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

numpydoc_show_class_members = False

# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"

autodoc_default_options = {"show-inheritance": True}
